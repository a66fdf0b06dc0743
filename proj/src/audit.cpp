#include "fedq/audit.hpp"

#include <algorithm>
#include <set>

#include "fedq/errors.hpp"

namespace fedq {

using nlohmann::json;

nlohmann::ordered_json AuditReport::to_json() const {
    nlohmann::ordered_json j;
    j["source_anonymity"] = source_anonymity;
    j["payload_opacity"] = payload_opacity;
    j["step_ordering"] = step_ordering;
    j["n_consistency"] = n_consistency;
    j["pass"] = pass();
    j["notes"] = notes;
    return j;
}

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
    return !needle.empty() && haystack.find(needle) != std::string::npos;
}

std::string envelope_text(const Envelope& env) {
    auto bytes = encode(env);
    return std::string(bytes.begin() + 4, bytes.end());
}

int type_rank(MsgType t) {
    switch (t) {
        case MsgType::Query: return 0;
        case MsgType::Ack: return 1;
        case MsgType::Count: return 2;
        case MsgType::KeySet: return 3;
        case MsgType::BlindedResponse: return 4;
        case MsgType::Bundle: return 5;
        case MsgType::Abort: return 6;
    }
    return 7;
}

}  // namespace

AuditReport audit_transcript(const Transcript& transcript,
                             const std::vector<std::string>& provider_ids,
                             const std::vector<std::string>& sensitive_cells) {
    AuditReport report;

    // One entry per transmission: the "send" records.
    std::vector<const TranscriptEntry*> sends;
    for (const auto& e : transcript.entries) {
        if (e.direction == "send") sends.push_back(&e);
    }

    // --- source anonymity ---
    report.source_anonymity = true;
    for (const auto* e : sends) {
        if (e->envelope.to.role != Role::Client) continue;
        std::string text = envelope_text(e->envelope);
        for (const auto& pid : provider_ids) {
            if (contains(text, pid)) {
                report.source_anonymity = false;
                report.notes.push_back("provider id '" + pid + "' in client-bound " +
                                       msg_type_name(e->envelope.type));
            }
        }
    }

    // --- payload opacity (post-Step-5 mediator-visible payloads) ---
    report.payload_opacity = true;
    for (const auto* e : sends) {
        MsgType t = e->envelope.type;
        if (t != MsgType::KeySet && t != MsgType::BlindedResponse && t != MsgType::Bundle) {
            continue;  // the query is an accepted, documented leak
        }
        std::string payload(e->envelope.payload.begin(), e->envelope.payload.end());
        for (const auto& cell : sensitive_cells) {
            if (cell.size() >= 3 && contains(payload, cell)) {
                report.payload_opacity = false;
                report.notes.push_back("plaintext cell '" + cell + "' in " +
                                       msg_type_name(t) + " payload");
            }
        }
    }

    // --- step ordering ---
    report.step_ordering = true;
    int max_rank = -1;
    size_t count_msgs = 0;
    bool first = true;
    for (const auto* e : sends) {
        MsgType t = e->envelope.type;
        if (t == MsgType::Abort) {
            report.step_ordering = false;
            report.notes.push_back("abort present in transcript");
            continue;
        }
        if (first) {
            first = false;
            if (!(t == MsgType::Query && e->envelope.from.role == Role::Client)) {
                report.step_ordering = false;
                report.notes.push_back("transcript does not open with the client query");
            }
        }
        int r = type_rank(t);
        if (r < max_rank) {
            report.step_ordering = false;
            report.notes.push_back(std::string(msg_type_name(t)) + " after " +
                                   ((max_rank >= 0 && max_rank <= 5)
                                        ? msg_type_name(static_cast<MsgType>(max_rank))
                                        : "later step"));
        }
        max_rank = std::max(max_rank, r);
        if (t == MsgType::Count) ++count_msgs;
    }
    if (sends.empty() || count_msgs != 1) {
        report.step_ordering = false;
        report.notes.push_back("expected exactly one count message, saw " +
                               std::to_string(count_msgs));
    }

    // --- N consistency ---
    std::set<std::string> ackers;
    size_t n_from_count = 0;
    bool have_count = false;
    size_t keysets_to_client = 0;
    size_t bundles_to_client = 0;
    for (const auto* e : sends) {
        const Envelope& env = e->envelope;
        switch (env.type) {
            case MsgType::Ack:
                ackers.insert(role_name(env.from.role) + ":" + env.from.id);
                break;
            case MsgType::Count:
                try {
                    n_from_count = json::parse(env.payload.begin(), env.payload.end())
                                       .at("n")
                                       .get<size_t>();
                    have_count = true;
                } catch (const json::exception&) {
                    report.notes.push_back("count payload unparseable");
                }
                break;
            case MsgType::KeySet:
                if (env.to.role == Role::Client) ++keysets_to_client;
                break;
            case MsgType::Bundle:
                if (env.to.role == Role::Client) ++bundles_to_client;
                break;
            default:
                break;
        }
    }
    report.n_consistency = have_count && n_from_count == ackers.size() &&
                           n_from_count == keysets_to_client &&
                           n_from_count == bundles_to_client;
    if (!report.n_consistency) {
        report.notes.push_back("N=" + std::to_string(n_from_count) + " acks=" +
                               std::to_string(ackers.size()) + " keysets=" +
                               std::to_string(keysets_to_client) + " bundles=" +
                               std::to_string(bundles_to_client));
    }

    return report;
}

}  // namespace fedq
