#include "wikimarket/replay.hpp"

#include "wikimarket/error.hpp"

namespace wikimarket {

namespace {

struct TornTail {};

class VerifyingSink : public EventSink {
public:
    explicit VerifyingSink(std::span<const EventRecord> journal) : journal_(journal) {}

    void append(std::span<const EventRecord> records) override {
        for (const auto& r : records) {
            if (cursor_ >= journal_.size()) throw TornTail{};
            const std::string derived = r.to_line();
            const std::string recorded = journal_[cursor_].to_line();
            if (derived != recorded) {
                throw Error(ErrorCode::ReplayDivergence, "seq " + std::to_string(r.seq) + ": journal has " + recorded +
                                                             " but replay derived " + derived);
            }
            ++cursor_;
        }
    }

    std::size_t cursor() const { return cursor_; }
    void seek(std::size_t pos) { cursor_ = pos; }

private:
    std::span<const EventRecord> journal_;
    std::size_t cursor_ = 0;
};

}  // namespace

ReplayResult replay_journal(std::span<const EventRecord> journal, const MarketConfig& config, ReplayOptions options) {
    for (std::size_t i = 0; i < journal.size(); ++i) {
        if (journal[i].seq != i + 1) {
            throw Error(ErrorCode::CorruptJournal,
                        "record " + std::to_string(i) + " has seq " + std::to_string(journal[i].seq));
        }
    }

    VerifyingSink sink(journal);
    Market market(config, &sink);
    std::size_t commands = 0;
    while (sink.cursor() < journal.size()) {
        const std::size_t start = sink.cursor();
        const EventRecord& rec = journal[start];
        try {
            market.apply(rec);
        } catch (const TornTail&) {
            if (!options.allow_torn_tail) {
                throw Error(ErrorCode::ReplayDivergence,
                            "journal ends inside the command at seq " + std::to_string(rec.seq));
            }
            return replay_journal(journal.first(start), config, {});
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ReplayDivergence || e.code() == ErrorCode::CorruptJournal) throw;
            throw Error(ErrorCode::ReplayDivergence,
                        "command at seq " + std::to_string(rec.seq) + " failed on replay: " + e.what());
        }
        if (sink.cursor() == start) {
            throw Error(ErrorCode::ReplayDivergence, "command at seq " + std::to_string(rec.seq) + " emitted nothing");
        }
        ++commands;
    }

    market.set_sink(nullptr);
    ReplayResult out{market, market.snapshot_digest(), sink.cursor(), commands};
    return out;
}

}  // namespace wikimarket
