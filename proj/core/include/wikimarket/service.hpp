#pragma once

// HTTP front end over a journaled Market.
//
// One writer at a time: every mutating request takes the exclusive lock,
// runs the command (which appends and fsyncs its records) and only then
// answers. Reads share the lock and always see a committed state.
//
// Authentication is a bearer token looked up in a roster file:
//
//   [{"token": "s3cret", "participant": "alice"},
//    {"token": "t0p", "participant": "prof", "role": "instructor"}]

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "wikimarket/market.hpp"

namespace wikimarket {

struct RosterEntry {
    std::string token;
    ParticipantId participant;
    bool instructor = false;
};

class Roster {
public:
    /// Throws InvalidConfig on malformed entries or duplicate tokens.
    static Roster from_json(const nlohmann::json& j);
    static Roster load(const std::filesystem::path& path);

    void add(RosterEntry entry);
    const RosterEntry* find(const std::string& token) const;
    std::size_t size() const { return by_token_.size(); }

private:
    std::map<std::string, RosterEntry> by_token_;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path journal;
    Roster roster;
    Money endowment = Money{1'000'000};
    int threads = 16;
};

class Service {
public:
    /// Opens and locks the journal and rebuilds state from it. A command
    /// cut short by a crash (torn tail) is dropped from the file. Throws
    /// JournalLocked, CorruptJournal, ReplayDivergence, StorageFailure.
    explicit Service(ServiceConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the listening socket and returns the port. Throws PortInUse.
    int bind();

    /// Serves until stop(). Binds first if needed.
    void run();

    /// bind() + run() on a background thread.
    void start();

    /// Closes the listener and ends open event streams.
    void stop();

    int port() const;
    std::uint64_t last_seq() const;
    std::string state_digest() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wikimarket
