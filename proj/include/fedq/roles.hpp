#ifndef FEDQ_ROLES_HPP
#define FEDQ_ROLES_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fedq/datastore.hpp"
#include "fedq/keyprotocol.hpp"
#include "fedq/perturb.hpp"
#include "fedq/transport.hpp"

namespace fedq {

nlohmann::ordered_json query_to_json(const Query& q);
Query query_from_json(const nlohmann::json& j);

struct SessionTiming {
    uint64_t ack_deadline = 2000;    // simulated units the mediator waits for acks
    uint64_t keyset_delay = 10;      // extra delay before a provider releases its keys
    uint64_t phase_timeout = 20000;  // client-side per-phase timeout
};

// Row union of decrypted provider results, attribution stripped, rows
// shuffled by the seeded source.
Table consolidate(const std::vector<Table>& tables, SeededRng& rng);

enum class ClientPhase { Idle, AwaitingCount, AwaitingKeySets, AwaitingBundles, Done, Failed };

class ClientNode : public Party {
public:
    ClientNode(std::string id, std::string session_id, Query query, size_t m,
               const Schema& shared_schema, SeededRng rng, SessionTiming timing = {});

    Role role() const override { return Role::Client; }
    std::string id() const override { return id_; }
    PartyOutput on_message(const Envelope& env, uint64_t now) override;
    PartyOutput on_timer(const std::string& name, uint64_t now) override;

    // Kicks off the session: emits the query toward the mediator.
    PartyOutput start(const std::string& mediator_id);

    ClientPhase phase() const { return phase_; }
    size_t n() const { return n_; }
    const std::optional<Table>& result() const { return result_; }
    const std::string& failure() const { return failure_; }

private:
    PartyOutput handle_count(const Envelope& env);
    PartyOutput handle_keyset(const Envelope& env);
    PartyOutput handle_bundle(const Envelope& env);
    void fail(const std::string& why);

    std::string id_;
    std::string session_id_;
    std::string mediator_id_;
    Query query_;
    size_t m_;
    Schema shared_schema_;
    SeededRng rng_;
    SessionTiming timing_;

    ClientPhase phase_ = ClientPhase::Idle;
    size_t n_ = 0;
    crypto::Keypair keypair_;
    std::map<std::string, KeySet> keysets_;            // alias -> key set
    std::map<std::string, Selection> selections_;      // alias -> selection
    std::map<std::string, EncryptedBundle> bundles_;   // alias -> bundle
    std::optional<Table> result_;
    std::string failure_;
};

class MediatorNode : public Party {
public:
    MediatorNode(std::string id, SessionTiming timing = {});

    void register_provider(const std::string& provider_id);
    const std::set<std::string>& registry() const { return registry_; }

    Role role() const override { return Role::Mediator; }
    std::string id() const override { return id_; }
    PartyOutput on_message(const Envelope& env, uint64_t now) override;
    PartyOutput on_timer(const std::string& name, uint64_t now) override;

    size_t n() const { return session_ ? session_->acked.size() : 0; }

private:
    struct Session {
        std::string session_id;
        std::string client_id;
        std::vector<std::string> acked;                 // provider ids, ack order
        std::map<std::string, std::string> alias_of;    // provider id -> alias
        std::map<std::string, std::string> id_of;       // alias -> provider id
        bool count_sent = false;
        size_t m = 0;
    };

    Envelope relay_to_client(const Envelope& inbound, const std::string& alias) const;
    Envelope relay_to_provider(const Envelope& inbound) const;

    std::string id_;
    SessionTiming timing_;
    std::set<std::string> registry_;
    std::optional<Session> session_;
};

enum class ProviderPhase { AwaitingQuery, Acked, KeysSent, Done, Failed };

class ProviderNode : public Party {
public:
    ProviderNode(std::string id, Table store, PerturbationPolicy policy, SeededRng rng,
                 SessionTiming timing = {});

    Role role() const override { return Role::Provider; }
    std::string id() const override { return id_; }
    PartyOutput on_message(const Envelope& env, uint64_t now) override;
    PartyOutput on_timer(const std::string& name, uint64_t now) override;

    ProviderPhase phase() const { return phase_; }
    const std::string& alias() const { return alias_; }

    // Test hook: ack but never deliver keys or bundle (fault injection).
    void set_silent_after_ack(bool v) { silent_after_ack_ = v; }

private:
    PartyOutput handle_query(const Envelope& env);
    PartyOutput handle_blinded(const Envelope& env);

    std::string id_;
    Table store_;
    PerturbationPolicy policy_;
    SeededRng rng_;
    SessionTiming timing_;
    bool silent_after_ack_ = false;

    ProviderPhase phase_ = ProviderPhase::AwaitingQuery;
    std::string session_id_;
    std::string mediator_id_;
    std::string alias_;
    std::optional<KeySet> keyset_;
    std::optional<Table> matched_;
};

}  // namespace fedq

#endif
