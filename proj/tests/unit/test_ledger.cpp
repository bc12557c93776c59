#include <functional>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wikimarket/error.hpp"
#include "wikimarket/ledger.hpp"

using namespace wikimarket;

using testutil::code_of;

TEST(Ledger, OpenAccount) {
    Ledger l;
    EXPECT_EQ(l.open_account("a", Money{500}).cash.centi, 500);
    EXPECT_EQ(code_of([&] { l.open_account("a", Money{1}); }), ErrorCode::DuplicateParticipant);
    EXPECT_EQ(code_of([&] { l.open_account("b", Money{-1}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { l.account("zz"); }), ErrorCode::UnknownParticipant);
    EXPECT_EQ(l.total_endowment().centi, 500);
}

TEST(Ledger, ReservationsMoveBetweenBuckets) {
    Ledger l;
    l.open_account("a", Money{1000});
    l.register_project(1);
    l.reserve_cash("a", Money{400});
    EXPECT_EQ(l.account("a").cash.centi, 600);
    EXPECT_EQ(l.account("a").reserved_cash.centi, 400);
    EXPECT_EQ(code_of([&] { l.reserve_cash("a", Money{601}); }), ErrorCode::InsufficientFunds);
    EXPECT_EQ(code_of([&] { l.release_cash("a", Money{401}); }), ErrorCode::InsufficientReservation);
    l.release_cash("a", Money{400});
    EXPECT_EQ(l.account("a").cash.centi, 1000);

    l.credit_shares("a", 1, ShareQty{10});
    EXPECT_EQ(code_of([&] { l.reserve_shares("a", 1, ShareQty{11}); }), ErrorCode::InsufficientHoldings);
    l.reserve_shares("a", 1, ShareQty{4});
    EXPECT_EQ(l.account("a").holdings.at(1).free.micro, 6);
    EXPECT_EQ(l.account("a").holdings.at(1).reserved.micro, 4);
    EXPECT_EQ(l.shares_outstanding(1).micro, 10);
    l.check_invariants();
}

TEST(Ledger, SettleTradeIsAllOrNothing) {
    Ledger l;
    l.open_account("b", Money{1000});
    l.open_account("s", Money{0});
    l.register_project(1);
    l.credit_shares("s", 1, ShareQty{100});
    l.reserve_cash("b", Money{500});
    l.reserve_shares("s", 1, ShareQty{50});
    EXPECT_EQ(code_of([&] { l.settle_trade("b", "s", 1, ShareQty{60}, Money{100}); }),
              ErrorCode::InsufficientReservation);
    EXPECT_EQ(code_of([&] { l.settle_trade("b", "s", 1, ShareQty{10}, Money{501}); }),
              ErrorCode::InsufficientReservation);
    EXPECT_EQ(code_of([&] { l.settle_trade("b", "b", 1, ShareQty{10}, Money{1}); }), ErrorCode::DegenerateTrade);
    EXPECT_EQ(code_of([&] { l.settle_trade("b", "s", 1, ShareQty{0}, Money{1}); }), ErrorCode::DegenerateTrade);
    EXPECT_EQ(l.account("b").reserved_cash.centi, 500);

    l.settle_trade("b", "s", 1, ShareQty{50}, Money{300});
    EXPECT_EQ(l.account("b").reserved_cash.centi, 200);
    EXPECT_EQ(l.account("s").cash.centi, 300);
    EXPECT_EQ(l.account("b").holdings.at(1).free.micro, 50);
    EXPECT_EQ(l.account("s").holdings.at(1).reserved.micro, 0);
    l.check_invariants();
    EXPECT_EQ(l.total_cash().centi, 1000);
}

TEST(Ledger, UnknownProject) {
    Ledger l;
    l.open_account("a", Money{1});
    EXPECT_EQ(code_of([&] { l.credit_shares("a", 9, ShareQty{1}); }), ErrorCode::UnknownProject);
}
