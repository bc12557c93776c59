#include "wikimarket/journal.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wikimarket/error.hpp"

namespace wikimarket {

namespace {

std::string errno_text() { return std::strerror(errno); }

std::vector<EventRecord> parse_lines(std::string_view data, std::vector<std::uint64_t>* offsets) {
    std::vector<EventRecord> out;
    std::size_t pos = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        if (nl == std::string_view::npos) break;  // torn tail, caller decides
        const auto line = data.substr(pos, nl - pos);
        if (!line.empty()) {
            EventRecord r = EventRecord::from_line(line);
            if (r.seq != out.size() + 1) {
                throw Error(ErrorCode::CorruptJournal, "expected seq " + std::to_string(out.size() + 1) + ", found " +
                                                           std::to_string(r.seq));
            }
            if (offsets) offsets->push_back(pos);
            out.push_back(std::move(r));
        }
        pos = nl + 1;
    }
    return out;
}

}  // namespace

void check_sequence(std::uint64_t last_seq, std::span<const EventRecord> records) {
    for (const auto& r : records) {
        if (r.seq != last_seq + 1) {
            throw Error(ErrorCode::SequenceGap,
                        "expected seq " + std::to_string(last_seq + 1) + ", got " + std::to_string(r.seq));
        }
        last_seq = r.seq;
    }
}

void MemoryJournal::append(std::span<const EventRecord> records) {
    check_sequence(last_seq(), records);
    records_.insert(records_.end(), records.begin(), records.end());
}

FileJournal FileJournal::open(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::StorageFailure, "open " + path.string() + ": " + errno_text());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        const int err = errno;
        ::close(fd);
        if (err == EWOULDBLOCK) throw Error(ErrorCode::JournalLocked, path.string() + " is held by another process");
        throw Error(ErrorCode::StorageFailure, "flock " + path.string() + ": " + std::strerror(err));
    }
    FileJournal j(path, fd);

    std::string data;
    char buf[1 << 16];
    for (;;) {
        const ssize_t n = ::read(fd, buf, sizeof buf);
        if (n < 0) throw Error(ErrorCode::StorageFailure, "read " + path.string() + ": " + errno_text());
        if (n == 0) break;
        data.append(buf, static_cast<std::size_t>(n));
    }
    j.records_ = parse_lines(data, &j.offsets_);
    const auto complete = data.rfind('\n') == std::string::npos ? 0 : data.rfind('\n') + 1;
    if (complete != data.size()) {
        if (::ftruncate(fd, static_cast<off_t>(complete)) != 0 || ::fsync(fd) != 0) {
            throw Error(ErrorCode::StorageFailure, "truncating torn tail: " + errno_text());
        }
    }
    j.size_ = complete;
    return j;
}

FileJournal::FileJournal(FileJournal&& other) noexcept
    : path_(std::move(other.path_)),
      fd_(std::exchange(other.fd_, -1)),
      records_(std::move(other.records_)),
      offsets_(std::move(other.offsets_)),
      size_(other.size_) {}

FileJournal& FileJournal::operator=(FileJournal&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = std::exchange(other.fd_, -1);
        records_ = std::move(other.records_);
        offsets_ = std::move(other.offsets_);
        size_ = other.size_;
    }
    return *this;
}

FileJournal::~FileJournal() {
    if (fd_ >= 0) ::close(fd_);  // releases the flock
}

void FileJournal::append(std::span<const EventRecord> records) {
    check_sequence(last_seq(), records);
    std::string buf;
    std::vector<std::uint64_t> offs;
    for (const auto& r : records) {
        offs.push_back(size_ + buf.size());
        buf += r.to_line();
        buf += '\n';
    }
    // on failure, best-effort cut back to the last durable size so a later
    // append does not land behind a partial line
    auto fail = [&](const std::string& what) {
        const std::string msg = what + " " + path_.string() + ": " + errno_text();
        [[maybe_unused]] const int rc = ::ftruncate(fd_, static_cast<off_t>(size_));
        throw Error(ErrorCode::StorageFailure, msg);
    };
    std::size_t done = 0;
    while (done < buf.size()) {
        const ssize_t n = ::pwrite(fd_, buf.data() + done, buf.size() - done, static_cast<off_t>(size_ + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("write");
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd_) != 0) fail("fdatasync");
    size_ += buf.size();
    records_.insert(records_.end(), records.begin(), records.end());
    offsets_.insert(offsets_.end(), offs.begin(), offs.end());
}

void FileJournal::truncate_after(std::uint64_t seq) {
    if (seq >= records_.size()) return;
    const std::uint64_t cut = offsets_[seq];
    if (::ftruncate(fd_, static_cast<off_t>(cut)) != 0 || ::fsync(fd_) != 0) {
        throw Error(ErrorCode::StorageFailure, "truncate " + path_.string() + ": " + errno_text());
    }
    records_.resize(seq);
    offsets_.resize(seq);
    size_ = cut;
}

std::vector<EventRecord> read_journal(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    if (!data.empty() && data.back() != '\n') {
        throw Error(ErrorCode::CorruptJournal, path.string() + " ends with a partial record");
    }
    return parse_lines(data, nullptr);
}

}  // namespace wikimarket
