#ifndef FEDQ_AUDIT_HPP
#define FEDQ_AUDIT_HPP

#include <string>
#include <vector>

#include "fedq/transport.hpp"

#include <nlohmann/json.hpp>

namespace fedq {

// Mechanical checks over a recorded transcript, one per privacy claim:
//   source_anonymity  - no client-bound envelope carries a registered
//                       provider identity; aliases only.
//   payload_opacity   - no mediator-visible post-count payload contains a
//                       plaintext sensitive cell value from any source
//                       table. Necessary, not sufficient. The plaintext
//                       query is an accepted, documented leak and excluded.
//   step_ordering     - message types appear in protocol step order.
//   n_consistency     - the count value equals the number of distinct acks,
//                       client-bound key sets, and client-bound bundles.
struct AuditReport {
    bool source_anonymity = false;
    bool payload_opacity = false;
    bool step_ordering = false;
    bool n_consistency = false;
    std::vector<std::string> notes;

    bool pass() const {
        return source_anonymity && payload_opacity && step_ordering && n_consistency;
    }
    nlohmann::ordered_json to_json() const;
};

AuditReport audit_transcript(const Transcript& transcript,
                             const std::vector<std::string>& provider_ids,
                             const std::vector<std::string>& sensitive_cells);

}  // namespace fedq

#endif
