#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wikimarket/error.hpp"
#include "wikimarket/journal.hpp"
#include "wikimarket/replay.hpp"
#include "wikimarket/scoring.hpp"
#include "wikimarket/service.hpp"
#include "wikimarket/sim.hpp"

namespace wikimarket::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

Market replayed(const fs::path& journal) { return replay_journal(read_journal(journal)).market; }

// {"<project>": value_centi, ...} or [{"project": p, "value_centi": v}, ...]
scoring::Valuation load_expost(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
    scoring::Valuation v;
    auto add = [&](const std::string& project, const json& value) {
        std::size_t used = 0;
        ProjectId id = 0;
        try {
            id = std::stoull(project, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != project.size()) throw Error(ErrorCode::InvalidArgument, "bad project id '" + project + "'");
        if (!value.is_number_integer()) {
            throw Error(ErrorCode::InvalidArgument, "value for project " + project + " must be integer centi");
        }
        v[id] = Money{value.get<std::int64_t>()};
    };
    if (j.is_object()) {
        for (const auto& [k, val] : j.items()) add(k, val);
    } else if (j.is_array()) {
        for (const auto& e : j) {
            if (!e.is_object() || !e.contains("project") || !e.contains("value_centi")) {
                throw Error(ErrorCode::InvalidArgument, "entries need 'project' and 'value_centi'");
            }
            add(e["project"].is_string() ? e["project"].get<std::string>() : e["project"].dump(), e["value_centi"]);
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": expected an object or an array");
    }
    return v;
}

int do_serve(const fs::path& journal, const fs::path& roster, int port, std::int64_t endowment, std::ostream& out) {
    ServiceConfig cfg;
    cfg.port = port;
    cfg.journal = journal;
    cfg.roster = Roster::load(roster);
    cfg.endowment = Money{endowment};

    // block the signals before any thread exists so only sigwait sees them
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Service service(std::move(cfg));
    const int bound = service.bind();
    out << "listening on 127.0.0.1:" << bound << " (seq " << service.last_seq() << ")" << std::endl;
    service.start();
    int sig = 0;
    sigwait(&set, &sig);
    service.stop();
    out << "stopped at seq " << service.last_seq() << std::endl;
    return 0;
}

int do_simulate(const std::optional<fs::path>& config, std::optional<std::uint64_t> seed, const fs::path& out_dir,
                std::ostream& out) {
    sim::SimConfig cfg = config ? sim::SimConfig::load(*config) : sim::SimConfig{};
    if (seed) cfg.seed = *seed;
    const sim::SimRun run = sim::run_semester_full(cfg);
    sim::emit_report(run.report, out_dir);
    std::string lines;
    for (const auto& r : run.journal) {
        lines += r.to_line();
        lines += '\n';
    }
    write_file(out_dir / "journal.jsonl", lines);
    write_file(out_dir / "config.json", cfg.to_json().dump(2) + "\n");
    out << sim::summary_text(run.report);
    return 0;
}

int do_replay(const fs::path& journal, std::ostream& out) {
    const auto records = read_journal(journal);
    const ReplayResult r = replay_journal(records);
    std::size_t trades = 0;
    for (const auto& rec : records) trades += rec.kind == EventKind::TradeExecuted;
    out << "digest: " << r.digest << '\n'
        << "records: " << r.records << '\n'
        << "commands: " << r.commands << '\n'
        << "participants: " << r.market.ledger().accounts().size() << '\n'
        << "projects: " << r.market.contributions().projects().size() << '\n'
        << "trades: " << trades << '\n'
        << "total_cash: " << format_er(r.market.ledger().total_cash()) << '\n';
    return 0;
}

int do_report(const fs::path& journal, const fs::path& out_dir, std::ostream& out) {
    const Market m = replayed(journal);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    std::ostringstream matrix, ante, points;
    scoring::write_matrix_csv(matrix, scoring::contribution_matrix(m));
    scoring::write_leaderboard_csv(ante, scoring::leaderboard(m, scoring::Mode::ExAnte));
    const auto valuation = scoring::merged_valuation(m);
    scoring::write_points_csv(points, scoring::scaling_points(m, valuation));
    write_file(out_dir / "matrix.csv", matrix.str());
    write_file(out_dir / "leaderboard_ex_ante.csv", ante.str());
    write_file(out_dir / "scaling_points.csv", points.str());
    out << "wrote matrix.csv leaderboard_ex_ante.csv scaling_points.csv";
    try {
        std::ostringstream post;
        scoring::write_leaderboard_csv(post, scoring::leaderboard(m, scoring::Mode::ExPost, valuation));
        write_file(out_dir / "leaderboard_ex_post.csv", post.str());
        out << " leaderboard_ex_post.csv";
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingValuation) throw;
    }
    out << " to " << out_dir.string() << '\n';

    const auto fit_points = scoring::ex_ante_fit_points(scoring::scaling_points(m));
    try {
        const auto fit = scoring::fit_scaling_exponent(fit_points);
        out << "ex_ante_slope: " << fit.slope << " (r2 " << fit.r_squared << ", n " << fit_points.size() << ")\n";
    } catch (const Error&) {
        out << "ex_ante_slope: n/a\n";
    }
    return 0;
}

int do_grade(const fs::path& journal, const fs::path& expost, const std::optional<fs::path>& out_file,
             std::ostream& out) {
    const Market m = replayed(journal);
    const auto valuation = scoring::merged_valuation(m, load_expost(expost));
    std::ostringstream csv;
    scoring::write_leaderboard_csv(csv, scoring::leaderboard(m, scoring::Mode::ExPost, valuation));
    if (out_file) {
        write_file(*out_file, csv.str());
    } else {
        out << csv.str();
    }
    return 0;
}

int do_import(const fs::path& journal, const fs::path& feed, std::ostream& out) {
    std::ifstream in(feed);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + feed.string());
    FileJournal j = FileJournal::open(journal);
    Market m = replay_journal(j.records()).market;
    m.set_sink(&j);
    std::string line;
    std::size_t n = 0, lineno = 0;
    std::int64_t bytes = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json e = json::parse(line);
            Revision rev;
            rev.revision_id = e.at("revision_id").get<std::string>();
            rev.project_id = e.at("project_id").get<ProjectId>();
            rev.participant_id = e.at("participant_id").get<std::string>();
            rev.ts = parse_rfc3339(e.at("ts").get<std::string>());
            rev.after_text = e.at("after_text").get<std::string>();
            bytes += m.ingest_revision(rev).bytes;
            ++n;
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::InvalidArgument, feed.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        } catch (const Error& ex) {
            throw Error(ex.code(), feed.string() + ":" + std::to_string(lineno) + ": " + ex.detail());
        }
    }
    out << "imported " << n << " revisions, " << bytes << " contributed bytes, seq " << m.last_seq() << '\n';
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Wiki contribution market: service, simulator and analytics", "wikimarket"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "Run the HTTP service on a journal");
    int port = 8080;
    std::int64_t endowment = 1'000'000;
    fs::path journal, roster;
    serve->add_option("--port", port, "TCP port on 127.0.0.1 (0 picks a free one)")->capture_default_str();
    serve->add_option("--journal", journal, "Journal file (created if missing, locked while serving)")->required();
    serve->add_option("--roster", roster, "JSON roster of bearer tokens")->required()->check(CLI::ExistingFile);
    serve->add_option("--endowment-centi", endowment, "Default endowment for new accounts, centi-ER$")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Run one simulated semester and write its report");
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    fs::path out_dir;
    simulate->add_option("--config", config, "JSON SimConfig (missing keys keep their defaults)")
        ->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed, "Overrides the config seed");
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* replay = app.add_subcommand("replay", "Replay a journal; print its state digest and a summary");
    fs::path replay_journal_path;
    replay->add_option("--journal", replay_journal_path, "Journal file (missing reads as empty)")->required();

    auto* report = app.add_subcommand("report", "Write contribution matrix, leaderboards and scaling points");
    fs::path report_journal;
    fs::path report_out;
    report->add_option("--journal", report_journal, "Journal file")->required();
    report->add_option("--out", report_out, "Output directory")->required();

    auto* grade = app.add_subcommand("grade", "Ex-post leaderboard CSV from a journal and instructor values");
    fs::path grade_journal, expost;
    std::optional<fs::path> grade_out;
    grade->add_option("--journal", grade_journal, "Journal file")->required();
    grade->add_option("--expost", expost, "JSON {\"<project>\": value_centi} (overrides journaled values)")
        ->required()
        ->check(CLI::ExistingFile);
    grade->add_option("--out", grade_out, "Write the CSV here instead of stdout");

    auto* import = app.add_subcommand("import", "Append a JSONL revision feed to a journal");
    fs::path import_journal, feed;
    import->add_option("--journal", import_journal, "Journal file")->required();
    import->add_option("--feed", feed, "One {revision_id, project_id, participant_id, ts, after_text} per line")
        ->required()
        ->check(CLI::ExistingFile);

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());  // CLI11 takes the vector reversed
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*serve) return do_serve(journal, roster, port, endowment, out);
        if (*simulate) return do_simulate(config, seed, out_dir, out);
        if (*replay) return do_replay(replay_journal_path, out);
        if (*report) return do_report(report_journal, report_out, out);
        if (*grade) return do_grade(grade_journal, expost, grade_out, out);
        if (*import) return do_import(import_journal, feed, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace wikimarket::cli
