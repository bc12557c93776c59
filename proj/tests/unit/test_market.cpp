#include <gtest/gtest.h>

#include <algorithm>

#include "../oracles/fuzz_session.hpp"
#include "test_util.hpp"
#include "wikimarket/journal.hpp"
#include "wikimarket/market.hpp"

using namespace wikimarket;
using testutil::code_of;

namespace {

Timestamp at(std::int64_t s) { return Timestamp::from_seconds(1'347'868'800 + s); }

struct FailingSink : EventSink {
    void append(std::span<const EventRecord>) override { throw Error(ErrorCode::StorageFailure, "disk gone"); }
};

}  // namespace

class MarketTest : public ::testing::Test {
protected:
    MemoryJournal journal;
    Market m{MarketConfig{}, &journal};
};

TEST_F(MarketTest, OpenAccountJournalsEndowment) {
    m.open_account("ann", std::nullopt, at(0));
    m.open_account("bob", Money{123}, at(1));
    ASSERT_EQ(journal.records().size(), 2u);
    EXPECT_EQ(journal.records()[0].kind, EventKind::AccountOpened);
    EXPECT_EQ(journal.records()[0].payload["endowment_centi"], 1'000'000);
    EXPECT_EQ(journal.records()[1].payload["endowment_centi"], 123);
    EXPECT_EQ(journal.records()[1].seq, 2u);
    EXPECT_EQ(m.last_seq(), 2u);
    EXPECT_EQ(code_of([&] { m.open_account("", std::nullopt, at(2)); }), ErrorCode::InvalidArgument);
}

TEST_F(MarketTest, FoundingGrantsFiveSharesAtPar) {
    m.open_account("ann", std::nullopt, at(0));
    const Project& p = m.create_project("ann", "Wiki", "idea\n", at(1));
    EXPECT_EQ(p.id, 1u);
    EXPECT_EQ(m.ledger().account("ann").holdings.at(1).free, ShareQty::shares(5));
    EXPECT_EQ(m.last_price(1), Money::er(100));
    ASSERT_EQ(journal.records().size(), 3u);
    EXPECT_EQ(journal.records()[1].kind, EventKind::ProjectCreated);
    EXPECT_EQ(journal.records()[2].kind, EventKind::SharesIssued);
    EXPECT_EQ(journal.records()[2].payload["qty_micro"], 5'000'000);
    EXPECT_EQ(journal.records()[2].payload["reason"], "founder");
}

TEST_F(MarketTest, RevisionsIssueAtLastTradePrice) {
    m.open_account("ann", std::nullopt, at(0));
    m.open_account("bob", std::nullopt, at(0));
    m.create_project("ann", "Wiki", "", at(1));
    m.submit_limit_order("ann", 1, Side::Ask, Money::er(200), ShareQty::shares(1), at(2));
    m.submit_limit_order("bob", 1, Side::Bid, Money::er(200), ShareQty::shares(1), at(3));
    EXPECT_EQ(m.last_price(1), Money::er(200));
    const auto out = m.ingest_revision({"r1", 1, "bob", at(4), std::nullopt, std::string(54, 'z') + "\n"});
    EXPECT_EQ(out.bytes, 55);
    EXPECT_EQ(out.issued, ShareQty{500'000});
    EXPECT_EQ(out.price, Money::er(200));
    EXPECT_EQ(journal.records().back().kind, EventKind::SharesIssued);
}

TEST_F(MarketTest, FailedCommandsLeaveNoTrace) {
    m.open_account("ann", std::nullopt, at(0));
    m.create_project("ann", "Wiki", "", at(1));
    const std::string digest = m.snapshot_digest();
    const auto n = journal.records().size();
    EXPECT_EQ(code_of([&] { m.open_account("ann", std::nullopt, at(2)); }), ErrorCode::DuplicateParticipant);
    EXPECT_EQ(code_of([&] { m.create_project("ann", "Wiki", "", at(2)); }), ErrorCode::DuplicateTitle);
    EXPECT_EQ(code_of([&] { m.submit_limit_order("ann", 1, Side::Ask, Money{1}, ShareQty::shares(6), at(2)); }),
              ErrorCode::InsufficientHoldings);
    EXPECT_EQ(code_of([&] { m.cancel_order("ann", 1, at(2)); }), ErrorCode::UnknownOrder);
    EXPECT_EQ(code_of([&] { m.set_ex_post_value(4, Money{1}, at(2)); }), ErrorCode::UnknownProject);
    EXPECT_EQ(code_of([&] { m.set_ex_post_value(1, Money{-1}, at(2)); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { m.ingest_revision({"r", 1, "ann", at(2), std::string("x\n"), ""}); }),
              ErrorCode::StaleRevision);
    EXPECT_EQ(m.snapshot_digest(), digest);
    EXPECT_EQ(journal.records().size(), n);
}

TEST_F(MarketTest, ExPostValues) {
    m.open_account("ann", std::nullopt, at(0));
    m.create_project("ann", "Wiki", "", at(1));
    m.set_ex_post_value(1, Money::er(40), at(2));
    m.set_ex_post_value(1, Money::er(50), at(3));  // later value wins
    EXPECT_EQ(m.ex_post_values().at(1), Money::er(50));
    EXPECT_EQ(journal.records().back().kind, EventKind::ExPostValueSet);
}

TEST_F(MarketTest, ApplyReexecutesCommands) {
    m.open_account("ann", std::nullopt, at(0));
    m.open_account("bob", std::nullopt, at(0));
    m.create_project("ann", "Wiki", "a\n", at(1));
    m.submit_limit_order("ann", 1, Side::Ask, Money::er(120), ShareQty::shares(2), at(2));
    m.submit_limit_order("bob", 1, Side::Bid, Money::er(130), ShareQty::shares(1), at(3));
    m.ingest_revision({"r1", 1, "bob", at(4), std::nullopt, "a\nb\n"});

    MemoryJournal copy_journal;
    Market copy(MarketConfig{}, &copy_journal);
    for (const auto& r : journal.records()) {
        if (r.is_command()) copy.apply(r);
    }
    EXPECT_EQ(copy.snapshot_digest(), m.snapshot_digest());
    EXPECT_EQ(copy_journal.records(), journal.records());
    const auto issued = std::find_if(journal.records().begin(), journal.records().end(),
                                     [](const EventRecord& r) { return r.kind == EventKind::SharesIssued; });
    ASSERT_NE(issued, journal.records().end());
    EXPECT_EQ(code_of([&] { copy.apply(*issued); }), ErrorCode::ReplayDivergence);
}

TEST(MarketSink, StorageFailurePropagates) {
    FailingSink sink;
    Market m(MarketConfig{}, &sink);
    EXPECT_EQ(code_of([&] { m.open_account("ann", std::nullopt, Timestamp{}); }), ErrorCode::StorageFailure);
}

TEST(MarketSink, DetachedCopiesEmitNothing) {
    MemoryJournal j;
    Market m(MarketConfig{}, &j);
    m.open_account("ann", std::nullopt, Timestamp{});
    Market snap = m;
    snap.set_sink(nullptr);
    snap.open_account("bob", std::nullopt, Timestamp{});
    EXPECT_EQ(j.records().size(), 1u);
}

TEST(MarketFuzz, BooksReconcileAfterEveryCommand) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto s = oracle::run_fuzz(seed, 2'000);
        ASSERT_EQ(s->failure, "") << "seed " << seed;
        EXPECT_GT(s->stats.trades, 20u);
        EXPECT_GT(s->stats.revisions, 100u);
        EXPECT_GT(s->stats.rejected, 50u);
    }
}
