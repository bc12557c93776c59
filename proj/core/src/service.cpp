#include "wikimarket/service.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "wikimarket/error.hpp"
#include "wikimarket/journal.hpp"
#include "wikimarket/replay.hpp"
#include "wikimarket/scoring.hpp"

namespace wikimarket {

using nlohmann::json;

// --- roster ----------------------------------------------------------------

Roster Roster::from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "roster must be a JSON array");
    Roster r;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("token") || !e["token"].is_string() || !e.contains("participant") ||
            !e["participant"].is_string()) {
            throw Error(ErrorCode::InvalidConfig, "roster entries need string 'token' and 'participant'");
        }
        RosterEntry entry{e["token"].get<std::string>(), e["participant"].get<std::string>(), false};
        if (e.contains("role")) {
            const auto role = e["role"].is_string() ? e["role"].get<std::string>() : std::string();
            if (role != "instructor" && role != "student") {
                throw Error(ErrorCode::InvalidConfig, "roster role must be 'student' or 'instructor'");
            }
            entry.instructor = role == "instructor";
        }
        r.add(std::move(entry));
    }
    return r;
}

Roster Roster::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read roster " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

void Roster::add(RosterEntry entry) {
    if (entry.token.empty()) throw Error(ErrorCode::InvalidConfig, "empty roster token");
    if (by_token_.contains(entry.token)) throw Error(ErrorCode::InvalidConfig, "duplicate roster token");
    by_token_.emplace(entry.token, std::move(entry));
}

const RosterEntry* Roster::find(const std::string& token) const {
    auto it = by_token_.find(token);
    return it == by_token_.end() ? nullptr : &it->second;
}

// --- helpers ---------------------------------------------------------------

namespace {

struct HttpError {
    int status;
    std::string error;
    std::string message;
};

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::ZeroQuantity:
        case ErrorCode::NonPositivePrice:
        case ErrorCode::NonPositiveValue:
        case ErrorCode::DegenerateTrade:
        case ErrorCode::InsufficientPoints:
            return 400;
        case ErrorCode::NotOwner:
            return 403;
        case ErrorCode::UnknownParticipant:
        case ErrorCode::UnknownProject:
        case ErrorCode::UnknownOrder:
            return 404;
        case ErrorCode::DuplicateParticipant:
        case ErrorCode::DuplicateTitle:
        case ErrorCode::StaleRevision:
        case ErrorCode::AlreadyFilled:
        case ErrorCode::MissingValuation:
            return 409;
        case ErrorCode::InsufficientFunds:
        case ErrorCode::InsufficientHoldings:
        case ErrorCode::InsufficientReservation:
            return 422;
        case ErrorCode::StorageFailure:
            return 503;
        default:
            return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", "application/json");
}

json parse_body(const httplib::Request& req) {
    json j;
    try {
        j = req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::exception& e) {
        throw HttpError{400, "InvalidArgument", std::string("body is not valid JSON: ") + e.what()};
    }
    if (!j.is_object()) throw HttpError{400, "InvalidArgument", "body must be a JSON object"};
    return j;
}

std::int64_t int_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw HttpError{400, "InvalidArgument", std::string("field '") + key + "' must be an integer"};
    }
    return j[key].get<std::int64_t>();
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw HttpError{400, "InvalidArgument", std::string("field '") + key + "' must be a string"};
    }
    return j[key].get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return string_field(j, key);
}

std::uint64_t parse_id(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
        throw HttpError{400, "InvalidArgument", std::string("bad ") + what + " '" + text + "'"};
    }
    return v;
}

json order_json(const Order& o) {
    return json{{"order_id", o.id},
                {"participant", o.participant},
                {"project", o.project},
                {"side", std::string(to_string(o.side))},
                {"price_centi", o.limit.centi},
                {"original_micro", o.original.micro},
                {"remaining_micro", o.remaining.micro},
                {"reserved_centi", o.reserved_cash.centi},
                {"ts", to_rfc3339(o.ts)}};
}

json project_json(const Market& m, const Project& p, bool with_text) {
    json j{{"project", p.id},
           {"title", p.title},
           {"creator", p.creator},
           {"created_ts", to_rfc3339(p.created_ts)},
           {"last_revision_ts", to_rfc3339(p.last_revision_ts)},
           {"last_price_centi", m.last_price(p.id).centi},
           {"shares_outstanding_micro", m.ledger().shares_outstanding(p.id).micro},
           {"total_contributed_bytes", p.total_contributed_bytes}};
    auto v = m.ex_post_values().find(p.id);
    j["ex_post_value_centi"] = v == m.ex_post_values().end() ? json(nullptr) : json(v->second.centi);
    if (with_text) j["text"] = p.body;
    return j;
}

json portfolio_json(const Market& m, const ParticipantId& id) {
    const Account& a = m.ledger().account(id);
    json holdings = json::array();
    for (const auto& [proj, h] : a.holdings) {
        holdings.push_back({{"project", proj},
                            {"free_micro", h.free.micro},
                            {"reserved_micro", h.reserved.micro},
                            {"last_price_centi", m.last_price(proj).centi},
                            {"value_centi", notional_half_up(m.last_price(proj), h.total()).centi}});
    }
    json orders = json::array();
    for (const Order* o : m.exchange().orders_of(id)) orders.push_back(order_json(*o));
    json ex_post = nullptr;
    try {
        ex_post = scoring::ex_post_value(m, id, m.ex_post_values()).centi;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingValuation) throw;
    }
    return json{{"participant", id},
                {"endowment_centi", a.endowment.centi},
                {"cash_centi", a.cash.centi},
                {"reserved_cash_centi", a.reserved_cash.centi},
                {"ex_ante_centi", scoring::ex_ante_value(m, id).centi},
                {"ex_post_centi", ex_post},
                {"contributed_bytes", scoring::contributed_bytes(m, id)},
                {"holdings", holdings},
                {"orders", orders}};
}

json submit_json(const SubmitResult& r) {
    json fills = json::array();
    json cancels = json::array();
    for (const auto& step : r.steps) {
        if (const auto* f = std::get_if<Fill>(&step)) fills.push_back(fill_payload(*f));
        if (const auto* c = std::get_if<Cancellation>(&step)) cancels.push_back(cancellation_payload(*c));
    }
    return json{{"order_id", r.order_id}, {"resting", r.resting}, {"fills", fills}, {"cancellations", cancels}};
}

json levels_json(const std::vector<PriceLevel>& levels) {
    json out = json::array();
    for (const auto& l : levels) {
        out.push_back({{"price_centi", l.price.centi}, {"qty_micro", l.quantity.micro}, {"orders", l.orders}});
    }
    return out;
}

}  // namespace

// --- service ---------------------------------------------------------------

struct Service::Impl {
    ServiceConfig config;
    MarketConfig market_config;
    FileJournal journal;
    Market market;
    mutable std::shared_mutex mutex;
    std::condition_variable_any appended;
    std::atomic<bool> stopping{false};
    bool failed = false;
    Timestamp last_ts;
    std::atomic<std::uint64_t> requests{0};
    httplib::Server server;
    std::thread thread;
    int bound_port = -1;

    explicit Impl(ServiceConfig cfg)
        : config(std::move(cfg)), market_config(make_market_config(config)), journal(FileJournal::open(config.journal)) {
        ReplayResult r = replay_journal(journal.records(), market_config, ReplayOptions{.allow_torn_tail = true});
        if (r.records < journal.records().size()) {
            std::cerr << "journal: dropping " << journal.records().size() - r.records
                      << " record(s) of an unfinished command\n";
            journal.truncate_after(r.records);
        }
        market = std::move(r.market);
        market.set_sink(&journal);
        if (!journal.records().empty()) last_ts = journal.records().back().ts;
        routes();
    }

    static MarketConfig make_market_config(const ServiceConfig& c) {
        if (c.endowment.centi < 0) throw Error(ErrorCode::InvalidConfig, "endowment must be >= 0");
        MarketConfig m;
        m.endowment = c.endowment;
        return m;
    }

    Timestamp next_ts() {
        Timestamp ts = Timestamp::now();
        if (ts.micros <= last_ts.micros) ts.micros = last_ts.micros + 1;
        last_ts = ts;
        return ts;
    }

    // Runs one command under the writer lock. On a storage failure the
    // in-memory state is rebuilt from what actually reached the journal.
    json mutate(const std::function<json(Timestamp)>& command) {
        json out;
        {
            std::unique_lock lock(mutex);
            if (failed) throw Error(ErrorCode::StorageFailure, "journal unavailable; restart the service");
            try {
                out = command(next_ts());
            } catch (const Error& e) {
                if (e.code() == ErrorCode::StorageFailure) recover();
                throw;
            }
        }
        appended.notify_all();
        return out;
    }

    void recover() {
        try {
            ReplayResult r = replay_journal(journal.records(), market_config);
            market = std::move(r.market);
            market.set_sink(&journal);
        } catch (const std::exception& e) {
            std::cerr << "journal: cannot rebuild state after storage failure: " << e.what() << '\n';
            failed = true;
        }
    }

    const RosterEntry& authenticate(const httplib::Request& req) const {
        const std::string header = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (header.rfind(prefix, 0) == 0) {
            if (const RosterEntry* e = config.roster.find(header.substr(prefix.size()))) return *e;
        }
        throw HttpError{401, "Unauthorized", "missing or unknown bearer token"};
    }

    static void require_instructor(const RosterEntry& who) {
        if (!who.instructor) throw HttpError{403, "Forbidden", "instructor role required"};
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&, const RosterEntry&)>;

    httplib::Server::Handler wrap(Handler h) {
        return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            const std::string rid = "req-" + std::to_string(++requests);
            res.set_header("X-Request-Id", rid);
            auto fail = [&](int status, const std::string& error, const std::string& message) {
                send_json(res, status, json{{"error", error}, {"message", message}, {"request_id", rid}});
            };
            try {
                h(req, res, authenticate(req));
            } catch (const HttpError& e) {
                fail(e.status, e.error, e.message);
            } catch (const Error& e) {
                const std::string code(to_string(e.code()));
                const std::string message = e.detail();
                fail(status_for(e.code()), code, message);
            } catch (const std::exception& e) {
                fail(500, "Internal", e.what());
            }
        };
    }

    void routes() {
        server.new_task_queue = [n = std::max(config.threads, 2)] { return new httplib::ThreadPool(n); };
        // httplib defaults to SO_REUSEPORT, which would let a second server share the port
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });

        // unrouted paths and other transport-level errors get the JSON shape too
        server.set_error_handler([this](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
            const std::string rid = "req-" + std::to_string(++requests);
            res.set_header("X-Request-Id", rid);
            const std::string reason = httplib::status_message(res.status);
            res.set_content(json{{"error", res.status == 404 ? "NotFound" : "HttpError"},
                                 {"message", reason},
                                 {"request_id", rid}}
                                    .dump() +
                                "\n",
                            "application/json");
            return httplib::Server::HandlerResponse::Handled;
        });

        server.Post("/participants", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            require_instructor(who);
            const json body = parse_body(req);
            const std::string id = string_field(body, "participant");
            std::optional<Money> endowment;
            if (body.contains("endowment_centi")) endowment = Money{int_field(body, "endowment_centi")};
            send_json(res, 201, mutate([&](Timestamp ts) {
                          const Account& a = market.open_account(id, endowment, ts);
                          return json{{"participant", a.id}, {"endowment_centi", a.endowment.centi}};
                      }));
        }));

        server.Get(R"(/participants/([^/]+)/portfolio)", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            std::shared_lock lock(mutex);
            send_json(res, 200, portfolio_json(market, req.matches[1].str()));
        }));

        server.Post("/projects", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            const json body = parse_body(req);
            const std::string title = string_field(body, "title");
            const std::string text = string_field(body, "text");
            send_json(res, 201, mutate([&](Timestamp ts) {
                          return project_json(market, market.create_project(who.participant, title, text, ts), false);
                      }));
        }));

        server.Get("/projects", wrap([this](const auto&, auto& res, const RosterEntry&) {
            std::shared_lock lock(mutex);
            json out = json::array();
            for (const auto& [id, p] : market.contributions().projects()) out.push_back(project_json(market, p, false));
            send_json(res, 200, out);
        }));

        server.Get(R"(/projects/(\d+))", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            const ProjectId id = parse_id(req.matches[1].str(), "project id");
            std::shared_lock lock(mutex);
            send_json(res, 200, project_json(market, market.contributions().project(id), true));
        }));

        server.Post(R"(/projects/(\d+)/revisions)", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            const ProjectId id = parse_id(req.matches[1].str(), "project id");
            const json body = parse_body(req);
            Revision rev;
            rev.project_id = id;
            rev.participant_id = who.participant;
            rev.after_text = string_field(body, "text");
            rev.before_text = optional_string(body, "base_text");
            const auto rid = optional_string(body, "revision_id");
            send_json(res, 201, mutate([&](Timestamp ts) {
                          rev.ts = ts;
                          rev.revision_id = rid ? *rid : "rev-" + std::to_string(market.last_seq() + 1);
                          const IngestOutcome o = market.ingest_revision(rev);
                          return json{{"revision_id", rev.revision_id},
                                      {"project", id},
                                      {"bytes", o.bytes},
                                      {"issued_micro", o.issued.micro},
                                      {"price_centi", o.price.centi}};
                      }));
        }));

        server.Get(R"(/book/(\d+))", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            const ProjectId id = parse_id(req.matches[1].str(), "project id");
            std::size_t depth = 10;
            if (req.has_param("depth")) depth = parse_id(req.get_param_value("depth"), "depth");
            std::shared_lock lock(mutex);
            if (!market.exchange().has_project(id)) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(id));
            const BookSnapshot b = market.exchange().book_snapshot(id, depth);
            send_json(res, 200,
                      json{{"project", id},
                           {"seq", market.last_seq()},
                           {"last_price_centi", market.last_price(id).centi},
                           {"bids", levels_json(b.bids)},
                           {"asks", levels_json(b.asks)}});
        }));

        server.Post("/orders", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            const json body = parse_body(req);
            const std::int64_t project = int_field(body, "project");
            if (project < 0) throw HttpError{400, "InvalidArgument", "project must be >= 0"};
            const Side side = parse_side(string_field(body, "side"));
            const Money price{int_field(body, "price_centi")};
            const ShareQty qty{int_field(body, "qty_micro")};
            send_json(res, 201, mutate([&](Timestamp ts) {
                          return submit_json(market.submit_limit_order(who.participant,
                                                                       static_cast<ProjectId>(project), side, price,
                                                                       qty, ts));
                      }));
        }));

        server.Delete(R"(/orders/(\d+))", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            const OrderId id = parse_id(req.matches[1].str(), "order id");
            send_json(res, 200, mutate([&](Timestamp ts) {
                          return cancellation_payload(market.cancel_order(who.participant, id, ts));
                      }));
        }));

        server.Get("/trades", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            std::optional<ProjectId> filter;
            if (req.has_param("project")) filter = parse_id(req.get_param_value("project"), "project id");
            std::shared_lock lock(mutex);
            json out = json::array();
            for (const auto& r : journal.records()) {
                if (r.kind != EventKind::TradeExecuted) continue;
                if (filter && r.payload.at("project").get<ProjectId>() != *filter) continue;
                json t = r.payload;
                t["seq"] = r.seq;
                t["ts"] = to_rfc3339(r.ts);
                out.push_back(std::move(t));
            }
            send_json(res, 200, out);
        }));

        server.Get("/leaderboard", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            const auto mode = scoring::parse_mode(req.has_param("mode") ? req.get_param_value("mode") : "ex_ante");
            std::shared_lock lock(mutex);
            const auto entries = scoring::leaderboard(market, mode, market.ex_post_values());
            if (req.has_param("format") && req.get_param_value("format") == "csv") {
                std::ostringstream os;
                scoring::write_leaderboard_csv(os, entries);
                res.status = 200;
                res.set_content(os.str(), "text/csv");
                return;
            }
            json rows = json::array();
            for (const auto& e : entries) {
                rows.push_back({{"rank", e.rank},
                                {"participant", e.participant},
                                {"score_centi", e.score.centi},
                                {"ex_ante_centi", e.ex_ante.centi},
                                {"ex_post_centi", e.ex_post ? json(e.ex_post->centi) : json(nullptr)},
                                {"contributed_bytes", e.contributed_bytes}});
            }
            send_json(res, 200, json{{"mode", std::string(scoring::to_string(mode))}, {"entries", rows}});
        }));

        server.Post("/expost", wrap([this](const auto& req, auto& res, const RosterEntry& who) {
            require_instructor(who);
            const json body = parse_body(req);
            const std::int64_t project = int_field(body, "project");
            if (project < 0) throw HttpError{400, "InvalidArgument", "project must be >= 0"};
            const Money value{int_field(body, "value_centi")};
            send_json(res, 200, mutate([&](Timestamp ts) {
                          market.set_ex_post_value(static_cast<ProjectId>(project), value, ts);
                          return json{{"project", project}, {"value_centi", value.centi}};
                      }));
        }));

        // NDJSON, one journal record per line, starting after since_seq.
        // Blank lines are keep-alives. timeout_ms bounds the stream.
        server.Get("/events", wrap([this](const auto& req, auto& res, const RosterEntry&) {
            std::uint64_t next = 1;
            if (req.has_param("since_seq")) next = parse_id(req.get_param_value("since_seq"), "since_seq") + 1;
            std::optional<std::chrono::steady_clock::time_point> deadline;
            if (req.has_param("timeout_ms")) {
                deadline = std::chrono::steady_clock::now() +
                           std::chrono::milliseconds(parse_id(req.get_param_value("timeout_ms"), "timeout_ms"));
            }
            auto idle_since = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
            res.set_chunked_content_provider(
                "application/x-ndjson", [this, next, deadline, idle_since](std::size_t, httplib::DataSink& sink) mutable {
                    using clock = std::chrono::steady_clock;
                    std::string chunk;
                    {
                        std::shared_lock lock(mutex);
                        auto until = clock::now() + std::chrono::milliseconds(200);
                        if (deadline) until = std::min(until, *deadline);
                        appended.wait_until(lock, until, [&] { return stopping.load() || journal.last_seq() >= next; });
                        const auto& records = journal.records();
                        for (; next <= records.size() && chunk.size() < (1u << 20); ++next) {
                            chunk += records[next - 1].to_line();
                            chunk += '\n';
                        }
                    }
                    const auto now = clock::now();
                    if (chunk.empty() && now - *idle_since > std::chrono::seconds(15)) chunk = "\n";
                    if (!chunk.empty()) {
                        if (!sink.write(chunk.data(), chunk.size())) return false;
                        *idle_since = now;
                    }
                    if (stopping.load() || (deadline && now >= *deadline)) sink.done();
                    return true;
                });
        }));
    }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

int Service::bind() {
    if (impl_->bound_port >= 0) return impl_->bound_port;
    const int port = impl_->config.port == 0 ? impl_->server.bind_to_any_port(impl_->config.host)
                                             : (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)
                                                    ? impl_->config.port
                                                    : -1);
    if (port < 0) {
        throw Error(ErrorCode::PortInUse,
                    "cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
    }
    impl_->bound_port = port;
    return port;
}

void Service::run() {
    bind();
    impl_->server.listen_after_bind();
}

void Service::start() {
    bind();
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void Service::stop() {
    if (!impl_) return;
    impl_->stopping = true;
    impl_->appended.notify_all();
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->bound_port; }

std::uint64_t Service::last_seq() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->market.last_seq();
}

std::string Service::state_digest() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->market.snapshot_digest();
}

}  // namespace wikimarket
