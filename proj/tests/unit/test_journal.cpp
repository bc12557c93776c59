#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wikimarket/error.hpp"
#include "wikimarket/journal.hpp"

using namespace wikimarket;

namespace {

EventRecord rec(std::uint64_t seq) {
    EventRecord r;
    r.seq = seq;
    r.ts = Timestamp::from_seconds(1'347'868'800 + static_cast<std::int64_t>(seq));
    r.kind = EventKind::AccountOpened;
    r.payload = {{"participant", "p" + std::to_string(seq)}, {"endowment_centi", 100}};
    return r;
}

}  // namespace

TEST(Journal, MemoryJournalEnforcesDenseSeq) {
    MemoryJournal j;
    std::vector<EventRecord> first{rec(1)};
    j.append(first);
    EXPECT_EQ(j.last_seq(), 1u);
    std::vector<EventRecord> gap{rec(3)};
    EXPECT_EQ(testutil::code_of([&] { j.append(gap); }), ErrorCode::SequenceGap);
    EXPECT_EQ(j.records().size(), 1u);
}

TEST(Journal, FileJournalPersistsAndReloads) {
    testutil::TempDir dir;
    const auto path = dir.path / "j.jsonl";
    {
        auto j = FileJournal::open(path);
        std::vector<EventRecord> batch{rec(1), rec(2)};
        j.append(batch);
        std::vector<EventRecord> more{rec(3)};
        j.append(more);
    }
    auto j = FileJournal::open(path);
    ASSERT_EQ(j.records().size(), 3u);
    EXPECT_EQ(j.records()[2], rec(3));
    EXPECT_EQ(read_journal(path).size(), 3u);
}

TEST(Journal, SecondOpenIsLocked) {
    testutil::TempDir dir;
    auto j = FileJournal::open(dir.path / "j.jsonl");
    EXPECT_EQ(testutil::code_of([&] { FileJournal::open(dir.path / "j.jsonl"); }), ErrorCode::JournalLocked);
}

TEST(Journal, TornTailIsCutOnOpen) {
    testutil::TempDir dir;
    const auto path = dir.path / "j.jsonl";
    {
        std::ofstream out(path);
        out << rec(1).to_line() << '\n' << rec(2).to_line().substr(0, 20);
    }
    EXPECT_EQ(testutil::code_of([&] { read_journal(path); }), ErrorCode::CorruptJournal);
    {
        auto j = FileJournal::open(path);
        EXPECT_EQ(j.records().size(), 1u);
        std::vector<EventRecord> next{rec(2)};
        j.append(next);
    }
    EXPECT_EQ(read_journal(path).size(), 2u);
}

TEST(Journal, TruncateAfterDropsRecords) {
    testutil::TempDir dir;
    const auto path = dir.path / "j.jsonl";
    {
        auto j = FileJournal::open(path);
        std::vector<EventRecord> batch{rec(1), rec(2), rec(3)};
        j.append(batch);
        j.truncate_after(1);
        EXPECT_EQ(j.last_seq(), 1u);
        std::vector<EventRecord> again{rec(2)};
        j.append(again);
    }
    const auto back = read_journal(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1], rec(2));
}

TEST(Journal, CorruptMiddleLineAndSeqMismatch) {
    testutil::TempDir dir;
    const auto path = dir.path / "j.jsonl";
    {
        std::ofstream out(path);
        out << rec(1).to_line() << "\n" << rec(3).to_line() << "\n";
    }
    EXPECT_EQ(testutil::code_of([&] { FileJournal::open(path); }), ErrorCode::CorruptJournal);
    {
        std::ofstream out(path);
        out << rec(1).to_line() << "\nnot json\n";
    }
    EXPECT_EQ(testutil::code_of([&] { read_journal(path); }), ErrorCode::CorruptJournal);
}

TEST(Journal, MissingFileReadsEmpty) {
    testutil::TempDir dir;
    EXPECT_TRUE(read_journal(dir.path / "absent.jsonl").empty());
}

TEST(Journal, WriteFailureIsStorageFailure) {
    testutil::TempDir dir;
    const auto path = dir.path / "j.jsonl";
    auto j = FileJournal::open(path);
    std::vector<EventRecord> first{rec(1)};
    j.append(first);
    {
        testutil::FileSizeLimit limit(std::filesystem::file_size(path) + 10);
        std::vector<EventRecord> batch{rec(2), rec(3)};
        EXPECT_EQ(testutil::code_of([&] { j.append(batch); }), ErrorCode::StorageFailure);
    }
    EXPECT_EQ(j.last_seq(), 1u);
    std::vector<EventRecord> retry{rec(2)};
    j.append(retry);
    EXPECT_EQ(read_journal(path).size(), 2u);
}
