#include "wikimarket/contributions.hpp"

#include "wikimarket/error.hpp"

namespace wikimarket {

Rational issuance_value(std::int64_t bytes, const IssuanceRule& rule) {
    if (bytes < 0) throw Error(ErrorCode::InvalidArgument, "negative byte count");
    if (rule.unit_bytes <= 0 || rule.unit_value.centi < 0) throw Error(ErrorCode::InvalidConfig, "issuance rule");
    return Rational(bytes) * rule.unit_value.centi / rule.unit_bytes;
}

Rational exact_issue_micro(const Rational& value, Money price) {
    if (price.centi <= 0) throw Error(ErrorCode::NonPositivePrice, format_er(price));
    return value * kMicroPerShare / price.centi;
}

IssueStep accrue_and_issue(Rational& owed, const Rational& value, Money price) {
    if (price.centi <= 0) throw Error(ErrorCode::NonPositivePrice, format_er(price));
    owed += value;
    IssueStep step;
    step.exact_micro = exact_issue_micro(owed, price);
    const boost::multiprecision::cpp_int whole =
        numerator(step.exact_micro) / denominator(step.exact_micro);  // non-negative, so truncation is floor
    step.issued = ShareQty{whole.convert_to<std::int64_t>()};
    owed -= Rational(step.issued.micro) * price.centi / kMicroPerShare;
    return step;
}

const Project& ContributionRegistry::create_project(Ledger& ledger, ProjectId id, const ParticipantId& creator,
                                                    const std::string& title, const std::string& initial_text,
                                                    Timestamp ts) {
    if (!ledger.has_account(creator)) throw Error(ErrorCode::UnknownParticipant, "no participant " + creator);
    if (titles_.contains(title)) throw Error(ErrorCode::DuplicateTitle, title);
    if (projects_.contains(id)) throw Error(ErrorCode::InvalidArgument, "project id reused");

    ledger.register_project(id);
    ledger.credit_shares(creator, id, rules_.founder_grant);

    Project p;
    p.id = id;
    p.creator = creator;
    p.created_ts = ts;
    p.last_revision_ts = ts;
    p.title = title;
    p.body = initial_text;
    titles_.emplace(title, id);
    return projects_.emplace(id, std::move(p)).first->second;
}

ShareQty ContributionRegistry::issue_for_revision(Ledger& ledger, const ParticipantId& participant,
                                                  ProjectId project, std::int64_t bytes, Money price) {
    if (!projects_.contains(project)) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(project));
    if (!ledger.has_account(participant)) throw Error(ErrorCode::UnknownParticipant, "no participant " + participant);
    if (price.centi <= 0) throw Error(ErrorCode::NonPositivePrice, format_er(price));

    const auto key = std::make_pair(participant, project);
    Rational& owed = owed_[key];
    const IssueStep step = accrue_and_issue(owed, issuance_value(bytes, rules_.issuance), price);
    if (owed == 0) owed_.erase(key);
    ledger.credit_shares(participant, project, step.issued);
    return step.issued;
}

const Project& ContributionRegistry::project(ProjectId id) const {
    auto it = projects_.find(id);
    if (it == projects_.end()) throw Error(ErrorCode::UnknownProject, "no project " + std::to_string(id));
    return it->second;
}

void ContributionRegistry::validate_revision(const Ledger& ledger, const Revision& rev) const {
    const Project& p = project(rev.project_id);
    if (!ledger.has_account(rev.participant_id)) throw Error(ErrorCode::UnknownParticipant, "no participant " + rev.participant_id);
    if (rev.before_text && *rev.before_text != p.body) {
        throw Error(ErrorCode::StaleRevision, "revision " + rev.revision_id + " was based on an older body");
    }
    if (rev.ts < p.last_revision_ts) {
        throw Error(ErrorCode::InvalidArgument, "revision " + rev.revision_id + " is older than the page");
    }
}

IngestOutcome ContributionRegistry::ingest_revision(Ledger& ledger, const Revision& rev, Money price) {
    validate_revision(ledger, rev);
    if (price.centi <= 0) throw Error(ErrorCode::NonPositivePrice, format_er(price));

    Project& p = projects_.at(rev.project_id);
    IngestOutcome out;
    out.price = price;
    out.bytes = count_contributed_bytes(p.body, rev.after_text);
    out.issued = issue_for_revision(ledger, rev.participant_id, rev.project_id, out.bytes, price);
    p.body = rev.after_text;
    p.total_contributed_bytes += out.bytes;
    p.last_revision_ts = rev.ts;
    if (out.bytes > 0) contributed_[{rev.participant_id, rev.project_id}] += out.bytes;
    return out;
}

}  // namespace wikimarket
