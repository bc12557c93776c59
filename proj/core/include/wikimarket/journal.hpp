#pragma once

// Append-only event journals. Both kinds enforce dense sequence numbers
// starting at 1; FileJournal makes each command's records durable
// (write + fsync) before append returns.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wikimarket/events.hpp"
#include "wikimarket/market.hpp"

namespace wikimarket {

class MemoryJournal : public EventSink {
public:
    void append(std::span<const EventRecord> records) override;

    const std::vector<EventRecord>& records() const { return records_; }
    std::uint64_t last_seq() const { return records_.empty() ? 0 : records_.back().seq; }

private:
    std::vector<EventRecord> records_;
};

class FileJournal : public EventSink {
public:
    /// Opens (creating if needed) and exclusively locks the journal file.
    /// Existing records are loaded; a final line without its newline is a
    /// torn write and is cut off. Throws JournalLocked, CorruptJournal,
    /// StorageFailure.
    static FileJournal open(const std::filesystem::path& path);

    FileJournal(FileJournal&& other) noexcept;
    FileJournal& operator=(FileJournal&& other) noexcept;
    FileJournal(const FileJournal&) = delete;
    FileJournal& operator=(const FileJournal&) = delete;
    ~FileJournal() override;

    void append(std::span<const EventRecord> records) override;

    /// Drops every record after `seq` (torn-command recovery).
    void truncate_after(std::uint64_t seq);

    const std::vector<EventRecord>& records() const { return records_; }
    std::uint64_t last_seq() const { return records_.empty() ? 0 : records_.back().seq; }
    const std::filesystem::path& path() const { return path_; }

private:
    FileJournal(std::filesystem::path path, int fd) : path_(std::move(path)), fd_(fd) {}

    std::filesystem::path path_;
    int fd_ = -1;
    std::vector<EventRecord> records_;
    std::vector<std::uint64_t> offsets_;  // byte offset of each record's line
    std::uint64_t size_ = 0;
};

/// Reads a journal file without locking it. Throws CorruptJournal or
/// IoFailure. A missing file reads as empty.
std::vector<EventRecord> read_journal(const std::filesystem::path& path);

/// Throws SequenceGap unless `records` continue densely from `last_seq`.
void check_sequence(std::uint64_t last_seq, std::span<const EventRecord> records);

}  // namespace wikimarket
