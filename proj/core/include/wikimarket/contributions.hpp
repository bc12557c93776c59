#pragma once

// Projects as wiki pages, contributed-byte measurement, and price-dependent
// share issuance.
//
// A contribution of `b` bytes is worth b * unit_value / unit_bytes ER$ of
// shares (ER$ 100 per 55 bytes by default), paid in shares at the project's
// current price. Value that does not fill a whole micro-share stays in an
// exact rational accumulator per (participant, project) and is paid out by
// later contributions.

#include <map>
#include <optional>
#include <string>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

#include "wikimarket/ledger.hpp"
#include "wikimarket/text_diff.hpp"
#include "wikimarket/timestamp.hpp"
#include "wikimarket/units.hpp"

namespace wikimarket {

/// Exact rational amount, in centi-ER$ unless stated otherwise.
using Rational = boost::multiprecision::cpp_rational;

struct IssuanceRule {
    Money unit_value = Money::er(100);
    std::int64_t unit_bytes = 55;
};

struct ContributionRules {
    IssuanceRule issuance;
    ShareQty founder_grant = ShareQty::shares(5);
};

/// Exact value (centi-ER$) earned by `bytes` contributed bytes.
Rational issuance_value(std::int64_t bytes, const IssuanceRule& rule = {});

/// Pre-quantization share amount, in micro-shares, that `value` buys at
/// `price`. Exactly inversely proportional to price.
Rational exact_issue_micro(const Rational& value, Money price);

struct IssueStep {
    ShareQty issued;
    Rational exact_micro;  // owed value before flooring, in micro-shares
};

/// Adds `value` to `owed`, converts the whole micro-shares it buys at
/// `price`, and leaves the exact remainder in `owed`.
IssueStep accrue_and_issue(Rational& owed, const Rational& value, Money price);

struct Project {
    ProjectId id = 0;
    ParticipantId creator;
    Timestamp created_ts;
    std::string title;
    std::string body;
    std::int64_t total_contributed_bytes = 0;
    Timestamp last_revision_ts;
};

struct Revision {
    std::string revision_id;
    ProjectId project_id = 0;
    ParticipantId participant_id;
    Timestamp ts;
    std::optional<std::string> before_text;  // absent: taken from current body
    std::string after_text;
};

struct IngestOutcome {
    std::int64_t bytes = 0;
    ShareQty issued;
    Money price;
};

class ContributionRegistry {
public:
    explicit ContributionRegistry(ContributionRules rules = {}) : rules_(rules) {}

    const ContributionRules& rules() const { return rules_; }

    /// Registers the page and credits the founder grant. The initial text
    /// earns nothing beyond the grant.
    const Project& create_project(Ledger& ledger, ProjectId id, const ParticipantId& creator,
                                  const std::string& title, const std::string& initial_text, Timestamp ts);

    /// Accrues issuance_value(bytes) and credits whatever it buys at
    /// `price`. Does not touch the page body.
    ShareQty issue_for_revision(Ledger& ledger, const ParticipantId& participant, ProjectId project,
                                std::int64_t bytes, Money price);

    /// Throws without side effects if the revision cannot be applied.
    void validate_revision(const Ledger& ledger, const Revision& rev) const;

    /// Diff + issuance at `price`; replaces the page body.
    IngestOutcome ingest_revision(Ledger& ledger, const Revision& rev, Money price);

    bool has_project(ProjectId id) const { return projects_.contains(id); }
    bool has_title(const std::string& title) const { return titles_.contains(title); }
    const Project& project(ProjectId id) const;
    const std::map<ProjectId, Project>& projects() const { return projects_; }

    /// Per (participant, project) contributed bytes and owed remainders.
    const std::map<std::pair<ParticipantId, ProjectId>, std::int64_t>& contributed() const { return contributed_; }
    const std::map<std::pair<ParticipantId, ProjectId>, Rational>& owed() const { return owed_; }

private:
    ContributionRules rules_;
    std::map<ProjectId, Project> projects_;
    std::map<std::string, ProjectId> titles_;
    std::map<std::pair<ParticipantId, ProjectId>, std::int64_t> contributed_;
    std::map<std::pair<ParticipantId, ProjectId>, Rational> owed_;
};

}  // namespace wikimarket
