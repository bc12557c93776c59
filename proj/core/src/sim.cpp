#include "wikimarket/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <nlohmann/json.hpp>

#include "wikimarket/error.hpp"
#include "wikimarket/journal.hpp"

namespace wikimarket::sim {

namespace {

using Rng = boost::random::mt19937_64;

// semester start: Monday 2012-09-17 08:00 UTC
constexpr std::int64_t kStartSeconds = 1'347'868'800;
constexpr std::int64_t kMinOrderMicro = 10'000;  // 0.01 share

double uniform(Rng& rng, double lo, double hi) {
    if (hi <= lo) return lo;
    return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return boost::random::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

std::int64_t poisson(Rng& rng, double mean) {
    if (!(mean > 0)) return 0;
    return boost::random::poisson_distribution<std::int64_t, double>(mean)(rng);
}

bool bernoulli(Rng& rng, double p) {
    if (p <= 0) return false;
    if (p >= 1) return true;
    return boost::random::bernoulli_distribution<double>(p)(rng);
}

double standard_normal(Rng& rng) { return boost::random::normal_distribution<double>(0.0, 1.0)(rng); }

std::string agent_name(int i) {
    std::ostringstream os;
    os << "agent" << std::setw(3) << std::setfill('0') << i;
    return os.str();
}

// Full lines of random lowercase text totalling exactly `bytes` (>= 8).
std::string random_lines(Rng& rng, std::int64_t bytes) {
    std::string out;
    out.reserve(static_cast<std::size_t>(bytes));
    std::int64_t remaining = bytes;
    while (remaining > 0) {
        std::int64_t len = std::min<std::int64_t>(remaining, uniform_int(rng, 20, 80));
        if (remaining - len > 0 && remaining - len < 8) len = remaining;
        std::uint64_t pool = 0;
        int left = 0;
        for (std::int64_t i = 0; i + 1 < len; ++i) {
            if (left == 0) {
                pool = rng() >> 3;  // 61 bits hold 13 base-26 digits
                left = 13;
            }
            out.push_back(static_cast<char>('a' + pool % 26));
            pool /= 26;
            --left;
        }
        out.push_back('\n');
        remaining -= len;
    }
    return out;
}

// Inserts `text` at a random line boundary. When the page would outgrow
// `cap` bytes, a run of existing lines at that spot is rewritten instead.
std::string edit_page(Rng& rng, const std::string& body, const std::string& text, std::int64_t cap) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < body.size();) {
        starts.push_back(i);
        const std::size_t nl = body.find('\n', i);
        i = nl == std::string::npos ? body.size() : nl + 1;
    }
    starts.push_back(body.size());
    const std::size_t n_lines = starts.size() - 1;
    std::size_t first = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n_lines)));
    std::size_t last = first;  // lines [first, last) are removed
    const auto overflow = static_cast<std::int64_t>(body.size() + text.size()) - cap;
    while (overflow > 0 && static_cast<std::int64_t>(starts[last] - starts[first]) < overflow) {
        if (last < n_lines) {
            ++last;
        } else if (first > 0) {
            --first;
        } else {
            break;
        }
    }
    std::string out = body.substr(0, starts[first]);
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
    out += text;
    out.append(body, starts[last], std::string::npos);
    return out;
}

Money to_centi(double v) { return Money{std::max<std::int64_t>(1, std::llround(v))}; }

class Semester {
public:
    explicit Semester(const SimConfig& cfg)
        : cfg_(cfg), rng_(cfg.seed), market_(market_config(cfg), &journal_) {}

    SimRun run();

private:
    struct Agent {
        AgentProfile profile;
        std::map<OrderId, int> orders;  // resting orders and the day they were placed
        std::int64_t bytes = 0;
    };

    static MarketConfig market_config(const SimConfig& cfg) {
        MarketConfig m;
        m.endowment = cfg.endowment;
        return m;
    }

    Timestamp tick() { return Timestamp::from_seconds(kStartSeconds + day_ * 86'400 + 60 + step_++); }

    double estimate(std::size_t agent, ProjectId project);
    ProjectId create_project(std::size_t agent);
    void cancel_stale(std::size_t agent);
    void contribute(std::size_t agent, std::int64_t bytes);
    void trade(std::size_t agent);
    SimReport assemble();

    SimConfig cfg_;
    Rng rng_;
    MemoryJournal journal_;
    Market market_;
    std::vector<Agent> agents_;
    std::map<ProjectId, double> true_value_;  // centi per share
    std::map<ProjectId, int> created_day_;
    std::map<std::pair<std::size_t, ProjectId>, double> estimates_;
    std::map<ProjectId, std::vector<Money>> closes_;
    std::map<ProjectId, std::int64_t> trades_;
    std::vector<IssuanceObservation> issuances_;
    LiquidityStats liquidity_;
    int day_ = 0;
    std::int64_t step_ = 0;
    int project_counter_ = 0;
};

double Semester::estimate(std::size_t agent, ProjectId project) {
    auto key = std::make_pair(agent, project);
    auto it = estimates_.find(key);
    if (it != estimates_.end()) return it->second;
    const double e = true_value_.at(project) * std::exp(agents_[agent].profile.signal_noise * standard_normal(rng_));
    return estimates_.emplace(key, e).first->second;
}

ProjectId Semester::create_project(std::size_t agent) {
    const auto& who = agents_[agent].profile.participant_id;
    const int n = ++project_counter_;
    const std::string title = "Project " + std::to_string(n);
    const std::string text = "Idea " + std::to_string(n) + " posted by " + who + "\n";
    const Project& p = market_.create_project(who, title, text, tick());
    const double quality =
        static_cast<double>(market_.config().par_price.centi) * std::exp(cfg_.quality_sigma_ln * standard_normal(rng_));
    true_value_[p.id] = std::max(1.0, std::round(quality));
    created_day_[p.id] = day_;
    return p.id;
}

void Semester::cancel_stale(std::size_t agent) {
    Agent& a = agents_[agent];
    for (auto it = a.orders.begin(); it != a.orders.end();) {
        if (market_.exchange().find_order(it->first) == nullptr) {
            it = a.orders.erase(it);
        } else if (day_ - it->second > cfg_.order_max_age_days) {
            market_.cancel_order(a.profile.participant_id, it->first, tick());
            ++liquidity_.cancels;
            it = a.orders.erase(it);
        } else {
            ++it;
        }
    }
}

void Semester::contribute(std::size_t agent, std::int64_t bytes) {
    Agent& a = agents_[agent];
    if (true_value_.empty()) create_project(agent);

    std::vector<ProjectId> ids;
    std::vector<double> weights;
    ProjectId fallback = 0;
    double best_ratio = -1;
    for (const auto& [id, _] : true_value_) {
        const double ratio = estimate(agent, id) / static_cast<double>(market_.last_price(id).centi);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            fallback = id;
        }
        if (ratio > 1.0) {
            ids.push_back(id);
            weights.push_back(std::pow(ratio - 1.0, cfg_.contribution_focus));
        }
    }
    ProjectId target = fallback;
    if (!ids.empty()) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double u = uniform(rng_, 0.0, total);
        target = ids.back();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (u < weights[i]) {
                target = ids[i];
                break;
            }
            u -= weights[i];
        }
    }

    const Project& p = market_.contributions().project(target);
    Revision rev;
    rev.revision_id = "r" + std::to_string(market_.last_seq() + 1);
    rev.project_id = target;
    rev.participant_id = a.profile.participant_id;
    rev.ts = tick();
    rev.after_text = edit_page(rng_, p.body, random_lines(rng_, bytes), cfg_.page_cap_bytes);
    const IngestOutcome out = market_.ingest_revision(rev);
    a.bytes += out.bytes;
    issuances_.push_back({target, out.bytes, out.price, out.issued});
}

void Semester::trade(std::size_t agent) {
    Agent& a = agents_[agent];
    if (true_value_.empty()) return;
    const Account& acct = market_.ledger().account(a.profile.participant_id);

    std::vector<ProjectId> held;
    for (const auto& [p, h] : acct.holdings)
        if (h.free.micro > 0) held.push_back(p);
    if (cfg_.liquidity_target > 0 && !held.empty()) {
        if (static_cast<double>(acct.cash.centi) < cfg_.liquidity_target * static_cast<double>(cfg_.endowment.centi)) {
            // holdings are offered in proportion to their market value
            double total_value = 0;
            for (ProjectId p : held) {
                total_value += static_cast<double>(notional_half_up(market_.last_price(p), acct.holdings.at(p).free).centi);
            }
            ProjectId offered = held.back();
            double u = uniform(rng_, 0.0, total_value);
            for (ProjectId p : held) {
                const double v = static_cast<double>(notional_half_up(market_.last_price(p), acct.holdings.at(p).free).centi);
                if (u < v) {
                    offered = p;
                    break;
                }
                u -= v;
            }
            const ShareQty free = acct.holdings.at(offered).free;
            if (free.micro < kMinOrderMicro) return;
            ShareQty qty{std::max<std::int64_t>(
                kMinOrderMicro,
                static_cast<std::int64_t>(std::floor(cfg_.order_share_fraction * static_cast<double>(free.micro))))};
            qty = std::min(qty, free);
            const SubmitResult res = market_.submit_limit_order(a.profile.participant_id, offered, Side::Ask,
                                                                to_centi(estimate(agent, offered)), qty, tick());
            ++liquidity_.orders;
            if (res.resting) a.orders.emplace(res.order_id, day_);
            for (const auto& f : res.fills()) {
                ++trades_[f.project];
                ++liquidity_.trades;
            }
            return;
        }
    }

    // pick where the perceived mispricing is largest, proportionally
    std::vector<ProjectId> ids;
    std::vector<double> weights;
    for (const auto& [id, _] : true_value_) {
        const double r = std::log(estimate(agent, id) / static_cast<double>(market_.last_price(id).centi));
        const auto h = acct.holdings.find(id);
        const bool can_sell = h != acct.holdings.end() && h->second.free.micro >= kMinOrderMicro;
        if (r > 0 || can_sell) {
            ids.push_back(id);
            weights.push_back(std::abs(r));
        }
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0)) return;
    double u = uniform(rng_, 0.0, total);
    ProjectId project = ids.back();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (u < weights[i]) {
            project = ids[i];
            break;
        }
        u -= weights[i];
    }

    const double est = estimate(agent, project);
    const double last = static_cast<double>(market_.last_price(project).centi);
    const double buy_ref = last;
    const double sell_ref = last;
    const double nudge = uniform(rng_, 0.2, 1.0);

    std::optional<SubmitResult> res;
    if (est > buy_ref * (1 + cfg_.price_threshold)) {
        const Money limit = to_centi(buy_ref + nudge * (est - buy_ref));
        const double budget = cfg_.order_cash_fraction * static_cast<double>(acct.cash.centi);
        ShareQty qty{static_cast<std::int64_t>(std::floor(budget * kMicroPerShare / static_cast<double>(limit.centi)))};
        while (qty.micro >= kMinOrderMicro && notional_ceil(limit, qty) > acct.cash) qty.micro -= kMinOrderMicro;
        if (qty.micro < kMinOrderMicro) return;
        res = market_.submit_limit_order(a.profile.participant_id, project, Side::Bid, limit, qty, tick());
    } else if (est < sell_ref * (1 - cfg_.price_threshold)) {
        auto h = acct.holdings.find(project);
        if (h == acct.holdings.end() || h->second.free.micro < kMinOrderMicro) return;
        const Money limit = to_centi(est + (1.0 - nudge) * (sell_ref - est));
        ShareQty qty{std::max<std::int64_t>(
            kMinOrderMicro, static_cast<std::int64_t>(std::floor(cfg_.order_share_fraction *
                                                                 static_cast<double>(h->second.free.micro))))};
        qty = std::min(qty, h->second.free);
        res = market_.submit_limit_order(a.profile.participant_id, project, Side::Ask, limit, qty, tick());
    } else {
        return;
    }

    ++liquidity_.orders;
    if (res->resting) a.orders.emplace(res->order_id, day_);
    for (const auto& f : res->fills()) {
        ++trades_[f.project];
        ++liquidity_.trades;
    }
}

SimRun Semester::run() {
    cfg_.validate();
    boost::random::lognormal_distribution<double> effort(cfg_.effort_mu_ln, cfg_.effort_sigma_ln);
    const double median_effort = std::exp(cfg_.effort_mu_ln);
    for (int i = 0; i < cfg_.n_agents; ++i) {
        Agent a;
        a.profile.participant_id = agent_name(i);
        a.profile.effort_rate = effort(rng_);
        double noise = uniform(rng_, cfg_.noise_min, cfg_.noise_max);
        if (cfg_.noise_effort_elasticity != 0 && a.profile.effort_rate > 0) {
            noise = std::clamp(noise * std::pow(median_effort / a.profile.effort_rate, cfg_.noise_effort_elasticity),
                               cfg_.noise_min, cfg_.noise_max);
        }
        a.profile.signal_noise = noise;
        a.profile.trade_propensity = uniform(rng_, cfg_.trade_propensity_min, cfg_.trade_propensity_max);
        a.profile.project_creation_rate = cfg_.project_creation_rate;
        market_.open_account(a.profile.participant_id, cfg_.endowment, tick());
        agents_.push_back(std::move(a));
    }

    std::vector<std::size_t> order(agents_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (day_ = 0; day_ < cfg_.n_days; ++day_) {
        step_ = 0;
        for (std::size_t i = order.size(); i > 1; --i) {  // Fisher-Yates, stable across platforms
            std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<std::int64_t>(i) - 1))]);
        }
        for (std::size_t idx : order) {
            cancel_stale(idx);
            const std::int64_t created = poisson(rng_, agents_[idx].profile.project_creation_rate);
            for (std::int64_t k = 0; k < created; ++k) create_project(idx);
            double rate = agents_[idx].profile.effort_rate;
            if (cfg_.wealth_effort_elasticity != 0 && cfg_.endowment.centi > 0) {
                const double wealth = static_cast<double>(
                    scoring::ex_ante_value(market_, agents_[idx].profile.participant_id).centi);
                rate *= std::pow(std::max(wealth, 1.0) / static_cast<double>(cfg_.endowment.centi),
                                 cfg_.wealth_effort_elasticity);
            }
            const std::int64_t bytes = std::min(poisson(rng_, rate), cfg_.max_daily_bytes);
            if (bytes >= cfg_.min_contribution_bytes) contribute(idx, bytes);
            if (bernoulli(rng_, agents_[idx].profile.trade_propensity)) trade(idx);
        }
        for (const auto& [id, _] : true_value_) closes_[id].push_back(market_.last_price(id));
    }

    const Timestamp end = Timestamp::from_seconds(kStartSeconds + static_cast<std::int64_t>(cfg_.n_days) * 86'400);
    for (const auto& [id, v] : true_value_) market_.set_ex_post_value(id, Money{std::llround(v)}, end);
    market_.check_invariants();

    SimRun run{assemble(), market_, journal_.records()};
    run.market.set_sink(nullptr);
    return run;
}

SimReport Semester::assemble() {
    SimReport r;
    r.config = cfg_;
    const scoring::Valuation valuation = market_.ex_post_values();
    for (const auto& a : agents_) {
        AgentResult ar;
        ar.profile = a.profile;
        ar.bytes = scoring::contributed_bytes(market_, a.profile.participant_id);
        ar.ex_ante = scoring::ex_ante_value(market_, a.profile.participant_id);
        ar.ex_post = scoring::ex_post_value(market_, a.profile.participant_id, valuation);
        r.agents.push_back(std::move(ar));
    }
    std::int64_t project_days = 0;
    for (const auto& [id, v] : true_value_) {
        const Project& p = market_.contributions().project(id);
        ProjectResult pr;
        pr.id = id;
        pr.creator = p.creator;
        pr.created_day = created_day_.at(id);
        pr.true_value = Money{std::llround(v)};
        pr.final_price = market_.last_price(id);
        pr.trades = trades_.contains(id) ? trades_.at(id) : 0;
        pr.bytes = p.total_contributed_bytes;
        pr.shares_outstanding = market_.ledger().shares_outstanding(id);
        pr.daily_close = closes_.contains(id) ? closes_.at(id) : std::vector<Money>{};
        project_days += static_cast<std::int64_t>(pr.daily_close.size());
        r.projects.push_back(std::move(pr));
    }
    r.matrix = scoring::contribution_matrix(market_);

    const auto points = scoring::scaling_points(market_, valuation);
    const auto fit_points = scoring::ex_ante_fit_points(points);
    try {
        r.fit = scoring::fit_scaling_exponent(fit_points);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientPoints) throw;
    }

    r.liquidity = liquidity_;
    r.liquidity.trades_per_project_day =
        project_days > 0 ? static_cast<double>(liquidity_.trades) / static_cast<double>(project_days) : 0.0;
    r.issuances = issuances_;

    std::string all;
    for (const auto& rec : journal_.records()) {
        all += rec.to_line();
        all += '\n';
    }
    r.journal_digest = sha256_hex(all);
    r.state_digest = market_.snapshot_digest();
    r.journal_records = journal_.records().size();
    return r;
}

std::string fmt_double(double v, int precision = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

void SimConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    auto finite = [](double v) { return std::isfinite(v); };
    if (n_agents < 0) fail("n_agents must be >= 0");
    if (n_days < 0) fail("n_days must be >= 0");
    if (endowment.centi < 0) fail("endowment must be >= 0");
    if (!finite(effort_mu_ln)) fail("effort_mu_ln must be finite");
    if (!finite(effort_sigma_ln) || effort_sigma_ln < 0) fail("effort_sigma_ln must be >= 0");
    if (min_contribution_bytes < 1) fail("min_contribution_bytes must be >= 1");
    if (page_cap_bytes < 1) fail("page_cap_bytes must be >= 1");
    if (max_daily_bytes < min_contribution_bytes) fail("max_daily_bytes must be >= min_contribution_bytes");
    if (!finite(contribution_focus) || contribution_focus < 0) fail("contribution_focus must be >= 0");
    if (!finite(quality_sigma_ln) || quality_sigma_ln < 0) fail("quality_sigma_ln must be >= 0");
    if (!finite(noise_min) || !finite(noise_max) || noise_min < 0 || noise_max < noise_min) {
        fail("need 0 <= noise_min <= noise_max");
    }
    if (!finite(noise_effort_elasticity)) fail("noise_effort_elasticity must be finite");
    if (!finite(wealth_effort_elasticity)) fail("wealth_effort_elasticity must be finite");
    if (!finite(liquidity_target) || liquidity_target < 0 || liquidity_target > 1) fail("liquidity_target in [0, 1]");
    if (!(trade_propensity_min >= 0 && trade_propensity_min <= trade_propensity_max && trade_propensity_max <= 1)) {
        fail("need 0 <= trade_propensity_min <= trade_propensity_max <= 1");
    }
    if (!finite(project_creation_rate) || project_creation_rate < 0) fail("project_creation_rate must be >= 0");
    if (!(order_cash_fraction > 0 && order_cash_fraction <= 1)) fail("order_cash_fraction must be in (0, 1]");
    if (!(order_share_fraction > 0 && order_share_fraction <= 1)) fail("order_share_fraction must be in (0, 1]");
    if (!finite(price_threshold) || price_threshold < 0 || price_threshold >= 1) fail("price_threshold in [0, 1)");
    if (order_max_age_days < 0) fail("order_max_age_days must be >= 0");
}

nlohmann::json SimConfig::to_json() const {
    return nlohmann::json{{"n_agents", n_agents},
                          {"n_days", n_days},
                          {"endowment_centi", endowment.centi},
                          {"effort_mu_ln", effort_mu_ln},
                          {"effort_sigma_ln", effort_sigma_ln},
                          {"min_contribution_bytes", min_contribution_bytes},
                          {"page_cap_bytes", page_cap_bytes},
                          {"max_daily_bytes", max_daily_bytes},
                          {"contribution_focus", contribution_focus},
                          {"quality_sigma_ln", quality_sigma_ln},
                          {"noise_min", noise_min},
                          {"noise_max", noise_max},
                          {"noise_effort_elasticity", noise_effort_elasticity},
                          {"wealth_effort_elasticity", wealth_effort_elasticity},
                          {"trade_propensity_min", trade_propensity_min},
                          {"trade_propensity_max", trade_propensity_max},
                          {"project_creation_rate", project_creation_rate},
                          {"order_cash_fraction", order_cash_fraction},
                          {"order_share_fraction", order_share_fraction},
                          {"price_threshold", price_threshold},
                          {"liquidity_target", liquidity_target},
                          {"order_max_age_days", order_max_age_days},
                          {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "simulation config must be a JSON object");
    SimConfig c;
    const nlohmann::json defaults = c.to_json();
    for (const auto& [key, _] : j.items()) {
        if (!defaults.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
    try {
        auto get = [&](const char* key, auto& dst) {
            if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
        };
        get("n_agents", c.n_agents);
        get("n_days", c.n_days);
        if (j.contains("endowment_centi")) c.endowment = Money{j.at("endowment_centi").get<std::int64_t>()};
        get("effort_mu_ln", c.effort_mu_ln);
        get("effort_sigma_ln", c.effort_sigma_ln);
        get("min_contribution_bytes", c.min_contribution_bytes);
        get("page_cap_bytes", c.page_cap_bytes);
        get("max_daily_bytes", c.max_daily_bytes);
        get("contribution_focus", c.contribution_focus);
        get("quality_sigma_ln", c.quality_sigma_ln);
        get("noise_min", c.noise_min);
        get("noise_max", c.noise_max);
        get("noise_effort_elasticity", c.noise_effort_elasticity);
        get("wealth_effort_elasticity", c.wealth_effort_elasticity);
        get("trade_propensity_min", c.trade_propensity_min);
        get("trade_propensity_max", c.trade_propensity_max);
        get("project_creation_rate", c.project_creation_rate);
        get("order_cash_fraction", c.order_cash_fraction);
        get("order_share_fraction", c.order_share_fraction);
        get("price_threshold", c.price_threshold);
        get("liquidity_target", c.liquidity_target);
        get("order_max_age_days", c.order_max_age_days);
        get("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    c.validate();
    return c;
}

SimConfig SimConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    return from_json(j);
}

double SimReport::max_over_mean_contribution() const {
    if (agents.empty()) return 0;
    std::int64_t max = 0;
    std::int64_t sum = 0;
    for (const auto& a : agents) {
        max = std::max(max, a.bytes);
        sum += a.bytes;
    }
    if (sum == 0) return 0;
    return static_cast<double>(max) / (static_cast<double>(sum) / static_cast<double>(agents.size()));
}

SimRun run_semester_full(const SimConfig& config) {
    Semester s(config);
    return s.run();
}

SimReport run_semester(const SimConfig& config) { return run_semester_full(config).report; }

SimReport run_semester(SimConfig config, std::uint64_t seed) {
    config.seed = seed;
    return run_semester(config);
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

CreativeDestruction creative_destruction_probe(const SimReport& report, double fair_band) {
    CreativeDestruction cd;
    const Money par = MarketConfig{}.par_price;
    std::vector<double> price, truth;
    for (const auto& p : report.projects) {
        ProjectClassification c;
        c.project = p.id;
        c.vs_founding = p.final_price > par ? PriceVsFounding::Above
                        : p.final_price < par ? PriceVsFounding::Below
                                              : PriceVsFounding::AtPar;
        const double t = static_cast<double>(p.true_value.centi);
        const double f = static_cast<double>(p.final_price.centi);
        c.vs_truth = f > t * (1 + fair_band) ? PriceVsTruth::Over
                     : f < t * (1 - fair_band) ? PriceVsTruth::Under
                                               : PriceVsTruth::Fair;
        cd.projects.push_back(c);
        price.push_back(f);
        truth.push_back(t);
    }
    if (report.liquidity.trades > 0) cd.rank_correlation = spearman(price, truth);

    if (report.projects.size() >= 4) {
        std::vector<const ProjectResult*> sorted;
        for (const auto& p : report.projects) sorted.push_back(&p);
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const ProjectResult* a, const ProjectResult* b) { return a->true_value < b->true_value; });
        const std::size_t q = sorted.size() / 4;
        std::size_t below = 0;
        for (std::size_t i = 0; i < q; ++i)
            if (sorted[i]->final_price < par) ++below;
        cd.bottom_quartile_below_par = static_cast<double>(below) / static_cast<double>(q);
    }
    return cd;
}

std::string summary_text(const SimReport& r) {
    const CreativeDestruction cd = creative_destruction_probe(r);
    std::ostringstream os;
    os << "seed: " << r.config.seed << '\n';
    os << "agents: " << r.agents.size() << '\n';
    os << "days: " << r.config.n_days << '\n';
    os << "projects: " << r.projects.size() << '\n';
    if (r.fit) {
        os << "scaling_slope: " << fmt_double(r.fit->slope) << '\n';
        os << "scaling_intercept: " << fmt_double(r.fit->intercept) << '\n';
        os << "scaling_r_squared: " << fmt_double(r.fit->r_squared) << '\n';
    } else {
        os << "scaling_slope: undefined\nscaling_intercept: undefined\nscaling_r_squared: undefined\n";
    }
    os << "max_over_mean_contribution: " << fmt_double(r.max_over_mean_contribution()) << '\n';
    os << "orders: " << r.liquidity.orders << '\n';
    os << "trades: " << r.liquidity.trades << '\n';
    os << "cancels: " << r.liquidity.cancels << '\n';
    os << "trades_per_project_day: " << fmt_double(r.liquidity.trades_per_project_day) << '\n';
    os << "rank_correlation_price_vs_value: "
       << (cd.rank_correlation ? fmt_double(*cd.rank_correlation) : std::string("undefined")) << '\n';
    os << "bottom_quartile_below_par: "
       << (cd.bottom_quartile_below_par ? fmt_double(*cd.bottom_quartile_below_par) : std::string("undefined"))
       << '\n';
    os << "journal_records: " << r.journal_records << '\n';
    os << "journal_digest: " << r.journal_digest << '\n';
    os << "state_digest: " << r.state_digest << '\n';
    return os.str();
}

std::vector<std::filesystem::path> emit_report(const SimReport& r, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* name, const std::string& content) {
        written.push_back(out_dir / name);
        write_file(written.back(), content);
    };

    std::ostringstream matrix;
    scoring::write_matrix_csv(matrix, r.matrix);
    emit("matrix.csv", matrix.str());

    std::ostringstream points;
    points << "participant,bytes,ex_ante,ex_post\n";
    for (const auto& a : r.agents) {
        points << scoring::csv_field(a.profile.participant_id) << ',' << a.bytes << ',' << format_er(a.ex_ante) << ','
               << format_er(a.ex_post) << '\n';
    }
    emit("scaling_points.csv", points.str());

    std::ostringstream series;
    series << "project,day,last_price\n";
    for (const auto& p : r.projects) {
        for (std::size_t i = 0; i < p.daily_close.size(); ++i) {
            series << p.id << ',' << p.created_day + static_cast<int>(i) << ',' << format_er(p.daily_close[i]) << '\n';
        }
    }
    emit("price_series.csv", series.str());

    std::ostringstream projects;
    projects << "project,creator,created_day,true_value,final_price,trades,bytes,shares_outstanding\n";
    for (const auto& p : r.projects) {
        projects << p.id << ',' << scoring::csv_field(p.creator) << ',' << p.created_day << ','
                 << format_er(p.true_value) << ',' << format_er(p.final_price) << ',' << p.trades << ',' << p.bytes
                 << ',' << format_shares(p.shares_outstanding) << '\n';
    }
    emit("projects.csv", projects.str());

    emit("summary.txt", summary_text(r));
    return written;
}

}  // namespace wikimarket::sim
