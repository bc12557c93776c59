#include <atomic>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "wikimarket/journal.hpp"
#include "wikimarket/replay.hpp"
#include "wikimarket/service.hpp"

using namespace wikimarket;
using nlohmann::json;
using testutil::code_of;

namespace {

Roster roster() {
    return Roster::from_json(json::parse(R"([
        {"token": "prof-token", "participant": "prof", "role": "instructor"},
        {"token": "ann-token", "participant": "ann"},
        {"token": "bob-token", "participant": "bob"},
        {"token": "eve-token", "participant": "eve"}
    ])"));
}

ServiceConfig config(const std::filesystem::path& journal) {
    ServiceConfig c;
    c.port = 0;
    c.journal = journal;
    c.roster = roster();
    c.threads = 24;
    return c;
}

struct Reply {
    int status = 0;
    json body;
    std::string raw;
};

class Api {
public:
    explicit Api(int port) : port_(port) {}

    Reply get(const std::string& path, const std::string& token) { return send("GET", path, token, ""); }
    Reply post(const std::string& path, const std::string& token, const json& body) {
        return send("POST", path, token, body.dump());
    }
    Reply post_raw(const std::string& path, const std::string& token, const std::string& body) {
        return send("POST", path, token, body);
    }
    Reply del(const std::string& path, const std::string& token) { return send("DELETE", path, token, ""); }

private:
    Reply send(const std::string& method, const std::string& path, const std::string& token, const std::string& body) {
        httplib::Client cli("127.0.0.1", port_);
        cli.set_read_timeout(10, 0);
        httplib::Headers h;
        if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
        httplib::Result r = method == "GET"    ? cli.Get(path, h)
                            : method == "POST" ? cli.Post(path, h, body, "application/json")
                                               : cli.Delete(path, h);
        Reply out;
        if (!r) {
            ADD_FAILURE() << method << " " << path << " failed: " << httplib::to_string(r.error());
            return out;
        }
        out.status = r->status;
        out.raw = r->body;
        out.body = json::parse(r->body, nullptr, false);
        if (out.status >= 400) {
            EXPECT_FALSE(r->get_header_value("X-Request-Id").empty());
        }
        return out;
    }
    int port_;
};

class ServiceTest : public ::testing::Test {
protected:
    testutil::TempDir dir;
    std::unique_ptr<Service> svc;
    std::unique_ptr<Api> api;

    void SetUp() override { start(); }

    void start() {
        svc = std::make_unique<Service>(config(dir.path / "journal.jsonl"));
        svc->start();
        api = std::make_unique<Api>(svc->port());
    }
    void restart() {
        svc->stop();
        svc.reset();
        start();
    }
    void enroll(std::initializer_list<const char*> who) {
        for (const char* w : who) ASSERT_EQ(api->post("/participants", "prof-token", {{"participant", w}}).status, 201);
    }
};

}  // namespace

TEST_F(ServiceTest, FreshServerHasNoProjects) {
    const auto r = api->get("/projects", "ann-token");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body, json::array());
}

TEST_F(ServiceTest, Authentication) {
    EXPECT_EQ(api->get("/projects", "").status, 401);
    const auto r = api->get("/projects", "wrong");
    EXPECT_EQ(r.status, 401);
    EXPECT_EQ(r.body["error"], "Unauthorized");
    EXPECT_TRUE(r.body.contains("request_id"));
    EXPECT_EQ(api->post("/participants", "ann-token", {{"participant", "x"}}).status, 403);
    EXPECT_EQ(api->post("/expost", "ann-token", {{"project", 1}, {"value_centi", 1}}).status, 403);
}

TEST_F(ServiceTest, FoundingShowsFullPortfolio) {
    enroll({"ann"});
    const auto p = api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", "idea\n"}});
    ASSERT_EQ(p.status, 201);
    EXPECT_EQ(p.body["project"], 1);
    EXPECT_EQ(p.body["shares_outstanding_micro"], 5'000'000);
    const auto pf = api->get("/participants/ann/portfolio", "bob-token");  // everything is public
    ASSERT_EQ(pf.status, 200);
    EXPECT_EQ(pf.body["cash_centi"], 1'000'000);
    EXPECT_EQ(pf.body["ex_ante_centi"], 1'050'000);  // ER$10'500.00
    EXPECT_EQ(pf.body["holdings"][0]["free_micro"], 5'000'000);
    EXPECT_TRUE(pf.body["ex_post_centi"].is_null());
    const auto detail = api->get("/projects/1", "bob-token");
    EXPECT_EQ(detail.body["text"], "idea\n");
    EXPECT_EQ(detail.body["creator"], "ann");
}

TEST_F(ServiceTest, OrderFlowAndBook) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    const auto ask = api->post("/orders", "ann-token",
                               {{"project", 1}, {"side", "ASK"}, {"price_centi", 12'000}, {"qty_micro", 2'000'000}});
    ASSERT_EQ(ask.status, 201);
    EXPECT_TRUE(ask.body["resting"]);
    auto book = api->get("/book/1", "bob-token");
    ASSERT_EQ(book.status, 200);
    EXPECT_EQ(book.body["asks"], json::parse(R"([{"orders":1,"price_centi":12000,"qty_micro":2000000}])"));
    EXPECT_EQ(book.body["bids"], json::array());

    const auto bid = api->post("/orders", "bob-token",
                               {{"project", 1}, {"side", "bid"}, {"price_centi", 12'500}, {"qty_micro", 500'000}});
    ASSERT_EQ(bid.status, 201);
    ASSERT_EQ(bid.body["fills"].size(), 1u);
    EXPECT_EQ(bid.body["fills"][0]["price_centi"], 12'000);
    EXPECT_EQ(bid.body["fills"][0]["notional_centi"], 6'000);

    book = api->get("/book/1?depth=1", "bob-token");
    EXPECT_EQ(book.body["asks"][0]["qty_micro"], 1'500'000);
    EXPECT_EQ(book.body["last_price_centi"], 12'000);

    const auto trades = api->get("/trades?project=1", "eve-token");
    ASSERT_EQ(trades.body.size(), 1u);
    EXPECT_EQ(trades.body[0]["buyer"], "bob");
    EXPECT_EQ(api->get("/trades?project=2", "eve-token").body, json::array());

    // cancel: owner only, once
    const std::string path = "/orders/" + std::to_string(ask.body["order_id"].get<int>());
    EXPECT_EQ(api->del(path, "bob-token").status, 403);
    const auto c = api->del(path, "ann-token");
    EXPECT_EQ(c.status, 200);
    EXPECT_EQ(c.body["released_micro"], 1'500'000);
    EXPECT_EQ(api->del(path, "ann-token").status, 404);
    EXPECT_EQ(api->del("/orders/" + std::to_string(bid.body["order_id"].get<int>()), "bob-token").status, 409);
}

TEST_F(ServiceTest, ErrorMapping) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    EXPECT_EQ(api->post_raw("/orders", "ann-token", "{not json").status, 400);
    EXPECT_EQ(api->post("/orders", "ann-token", {{"project", 1}, {"side", "ASK"}, {"price_centi", 1.5}, {"qty_micro", 1}})
                  .status,
              400);
    EXPECT_EQ(api->post("/orders", "ann-token", {{"project", 1}, {"side", "HOLD"}, {"price_centi", 1}, {"qty_micro", 1}})
                  .status,
              400);
    EXPECT_EQ(api->post("/orders", "ann-token", {{"project", 9}, {"side", "ASK"}, {"price_centi", 1}, {"qty_micro", 1}})
                  .status,
              404);
    const auto broke = api->post(
        "/orders", "bob-token", {{"project", 1}, {"side", "BID"}, {"price_centi", 100'000'000}, {"qty_micro", 5'000'000}});
    EXPECT_EQ(broke.status, 422);
    EXPECT_EQ(broke.body["error"], "InsufficientFunds");
    EXPECT_EQ(api->post("/orders", "ann-token", {{"project", 1}, {"side", "ASK"}, {"price_centi", 1}, {"qty_micro", 0}})
                  .status,
              400);
    EXPECT_EQ(api->post("/projects", "bob-token", {{"title", "Wiki"}, {"text", ""}}).status, 409);
    EXPECT_EQ(api->post("/participants", "prof-token", {{"participant", "ann"}}).status, 409);
    EXPECT_EQ(api->post("/projects/1/revisions", "bob-token", {{"text", "x\n"}, {"base_text", "old\n"}}).status, 409);
    EXPECT_EQ(api->get("/projects/7", "bob-token").status, 404);
    EXPECT_EQ(api->get("/participants/zed/portfolio", "bob-token").status, 404);
    EXPECT_EQ(api->get("/book/abc", "bob-token").status, 404);  // no such route
    // a rostered user without an account cannot act
    EXPECT_EQ(api->post("/projects", "eve-token", {{"title", "Eve"}, {"text", ""}}).status, 404);
}

TEST_F(ServiceTest, RevisionsAndLeaderboard) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", "a\n"}});
    const auto rev = api->post("/projects/1/revisions", "bob-token",
                               {{"text", "a\n" + std::string(54, 'b') + "\n"}, {"base_text", "a\n"}});
    ASSERT_EQ(rev.status, 201);
    EXPECT_EQ(rev.body["bytes"], 55);
    EXPECT_EQ(rev.body["issued_micro"], 1'000'000);
    EXPECT_FALSE(rev.body["revision_id"].get<std::string>().empty());

    const auto ante = api->get("/leaderboard", "bob-token");
    ASSERT_EQ(ante.status, 200);
    EXPECT_EQ(ante.body["mode"], "ex_ante");
    EXPECT_EQ(ante.body["entries"][0]["participant"], "ann");
    EXPECT_EQ(api->get("/leaderboard?mode=ex_post", "bob-token").status, 409);
    EXPECT_EQ(api->get("/leaderboard?mode=best", "bob-token").status, 400);

    ASSERT_EQ(api->post("/expost", "prof-token", {{"project", 1}, {"value_centi", 30'000}}).status, 200);
    const auto post = api->get("/leaderboard?mode=ex_post", "bob-token");
    ASSERT_EQ(post.status, 200);
    EXPECT_EQ(post.body["entries"][0]["score_centi"], 1'000'000 + 5 * 30'000);
    EXPECT_EQ(post.body["entries"][1]["score_centi"], 1'000'000 + 30'000);

    httplib::Client cli("127.0.0.1", svc->port());
    auto csv = cli.Get("/leaderboard?mode=ex_post&format=csv", {{"Authorization", "Bearer ann-token"}});
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->body,
              "rank,participant,score,ex_ante,ex_post,contributed_bytes\n"
              "1,ann,11500.00,10500.00,11500.00,0\n"
              "2,bob,10300.00,10100.00,10300.00,55\n");
}

TEST_F(ServiceTest, RestartRestoresState) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    api->post("/orders", "ann-token", {{"project", 1}, {"side", "ASK"}, {"price_centi", 11'000}, {"qty_micro", 1'000'000}});
    const std::string digest = svc->state_digest();
    const auto seq = svc->last_seq();
    restart();
    EXPECT_EQ(svc->state_digest(), digest);
    EXPECT_EQ(svc->last_seq(), seq);
    EXPECT_EQ(api->get("/book/1", "bob-token").body["asks"].size(), 1u);
    // timestamps keep increasing across the restart
    api->post("/orders", "bob-token", {{"project", 1}, {"side", "BID"}, {"price_centi", 11'000}, {"qty_micro", 1'000'000}});
    const auto records = read_journal(dir.path / "journal.jsonl");
    for (std::size_t i = 1; i < records.size(); ++i) EXPECT_LE(records[i - 1].ts, records[i].ts);
    EXPECT_EQ(replay_journal(records).digest, svc->state_digest());
}

TEST_F(ServiceTest, JournalLockedAndPortInUse) {
    EXPECT_EQ(code_of([&] { Service other(config(dir.path / "journal.jsonl")); }), ErrorCode::JournalLocked);
    auto c = config(dir.path / "other.jsonl");
    c.port = svc->port();
    Service other(c);
    EXPECT_EQ(code_of([&] { other.bind(); }), ErrorCode::PortInUse);
}

TEST_F(ServiceTest, StorageFailureAnswers503AndRecovers) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    const std::string digest = svc->state_digest();
    {
        testutil::FileSizeLimit limit(std::filesystem::file_size(dir.path / "journal.jsonl"));
        const auto r = api->post("/orders", "ann-token",
                                 {{"project", 1}, {"side", "ASK"}, {"price_centi", 11'000}, {"qty_micro", 1'000'000}});
        EXPECT_EQ(r.status, 503);
        EXPECT_EQ(r.body["error"], "StorageFailure");
    }
    EXPECT_EQ(svc->state_digest(), digest);  // the unjournaled order is gone
    EXPECT_EQ(api->get("/book/1", "bob-token").body["asks"].size(), 0u);
    const auto ok = api->post("/orders", "ann-token",
                              {{"project", 1}, {"side", "ASK"}, {"price_centi", 11'000}, {"qty_micro", 1'000'000}});
    EXPECT_EQ(ok.status, 201);
    EXPECT_EQ(replay_journal(read_journal(dir.path / "journal.jsonl")).digest, svc->state_digest());
}

TEST_F(ServiceTest, EventStreamDeliversInOrder) {
    enroll({"ann"});
    const auto r = api->get("/events?since_seq=0&timeout_ms=200", "ann-token");
    ASSERT_EQ(r.status, 200);
    std::istringstream lines(r.raw);
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(EventRecord::from_line(line).seq, 1u);
    EXPECT_EQ(EventRecord::from_line(line).kind, EventKind::AccountOpened);

    // a subscriber waiting at the head sees the next command
    std::atomic<bool> got{false};
    std::string received;
    std::thread sub([&] {
        httplib::Client cli("127.0.0.1", svc->port());
        cli.Get("/events?since_seq=1&timeout_ms=5000", {{"Authorization", "Bearer ann-token"}},
                [&](const char* data, std::size_t n) {
                    received.append(data, n);
                    if (received.find("ProjectCreated") != std::string::npos) {
                        got = true;
                        return false;
                    }
                    return true;
                });
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    sub.join();
    EXPECT_TRUE(got);
    EXPECT_EQ(EventRecord::from_line(received.substr(0, received.find('\n'))).seq, 2u);
}

TEST_F(ServiceTest, ConcurrentClientsAreSerialized) {
    enroll({"ann", "bob"});
    api->post("/projects", "ann-token", {{"title", "Wiki"}, {"text", ""}});
    std::vector<std::thread> threads;
    std::atomic<int> created{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            Api mine(svc->port());
            const bool seller = t % 2 == 0;
            for (int i = 0; i < 25; ++i) {
                const auto r = mine.post("/orders", seller ? "ann-token" : "bob-token",
                                         {{"project", 1},
                                          {"side", seller ? "ASK" : "BID"},
                                          {"price_centi", 10'000 + (i % 5) * 100},
                                          {"qty_micro", 37'000}});
                if (r.status == 201) ++created;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(created.load(), 200);

    const auto records = read_journal(dir.path / "journal.jsonl");
    for (std::size_t i = 0; i < records.size(); ++i) ASSERT_EQ(records[i].seq, i + 1);
    const ReplayResult r = replay_journal(records);
    EXPECT_EQ(r.digest, svc->state_digest());
    r.market.check_invariants();
    EXPECT_EQ(r.market.ledger().total_cash(), Money{2'000'000});
}

TEST(ServiceStartup, TornCommandIsDropped) {
    testutil::TempDir dir;
    const auto path = dir.path / "journal.jsonl";
    std::string digest;
    {
        FileJournal j = FileJournal::open(path);
        Market m(MarketConfig{}, &j);
        m.open_account("ann", std::nullopt, Timestamp{1});
        digest = m.snapshot_digest();
        m.create_project("ann", "Wiki", "", Timestamp{2});
    }
    // chop the SharesIssued record of the last command
    auto lines = read_journal(path);
    {
        std::ofstream out(path, std::ios::trunc);
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i].to_line() << '\n';
    }
    Service svc(config(path));
    EXPECT_EQ(svc.last_seq(), 1u);
    EXPECT_EQ(svc.state_digest(), digest);
    EXPECT_EQ(read_journal(path).size(), 1u);
}

TEST(Roster, Validation) {
    EXPECT_EQ(code_of([] { Roster::from_json(json::object()); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { Roster::from_json(json::parse(R"([{"token":"a"}])")); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { Roster::from_json(json::parse(R"([{"token":"a","participant":"x"},{"token":"a","participant":"y"}])")); }),
              ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { Roster::from_json(json::parse(R"([{"token":"a","participant":"x","role":"dean"}])")); }),
              ErrorCode::InvalidConfig);
    const Roster r = roster();
    EXPECT_TRUE(r.find("prof-token")->instructor);
    EXPECT_FALSE(r.find("ann-token")->instructor);
    EXPECT_EQ(r.find("nope"), nullptr);
}
