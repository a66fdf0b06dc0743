#include "fedq/roles.hpp"

#include <algorithm>

#include "fedq/errors.hpp"

namespace fedq {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

crypto::Bytes to_bytes(const ordered_json& j) {
    std::string s = j.dump();
    return crypto::Bytes(s.begin(), s.end());
}

json parse_payload(const Envelope& env) {
    try {
        return json::parse(env.payload.begin(), env.payload.end());
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("payload of ") + msg_type_name(env.type) + ": " + e.what());
    }
}

std::string op_name(QueryOp op) {
    switch (op) {
        case QueryOp::Eq: return "eq";
        case QueryOp::Range: return "range";
        case QueryOp::Any: return "any";
    }
    return "?";
}

QueryOp op_from_name(const std::string& s) {
    if (s == "eq") return QueryOp::Eq;
    if (s == "range") return QueryOp::Range;
    if (s == "any") return QueryOp::Any;
    throw SchemaError("unknown query op '" + s + "'");
}

}  // namespace

ordered_json query_to_json(const Query& q) {
    ordered_json j;
    j["column"] = q.column;
    j["op"] = op_name(q.op);
    j["value"] = q.value;
    j["low"] = q.low;
    j["high"] = q.high;
    j["projection"] = q.projection;
    return j;
}

Query query_from_json(const json& j) {
    Query q;
    q.column = j.at("column").get<std::string>();
    q.op = op_from_name(j.at("op").get<std::string>());
    q.value = j.value("value", std::string{});
    q.low = j.value("low", 0.0);
    q.high = j.value("high", 0.0);
    if (j.contains("projection")) {
        for (const auto& p : j.at("projection")) q.projection.push_back(p.get<std::string>());
    }
    return q;
}

Table consolidate(const std::vector<Table>& tables, SeededRng& rng) {
    Table out;
    if (tables.empty()) return out;
    out.schema = tables.front().schema;
    for (const auto& t : tables) {
        if (!(t.schema == out.schema)) {
            throw SchemaMismatch("provider results disagree on schema");
        }
        out.rows.insert(out.rows.end(), t.rows.begin(), t.rows.end());
    }
    // Fisher-Yates so row order carries no provider attribution.
    for (size_t i = out.rows.size(); i > 1; --i) {
        std::swap(out.rows[i - 1], out.rows[rng.below(i)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

ClientNode::ClientNode(std::string id, std::string session_id, Query query, size_t m,
                       const Schema& shared_schema, SeededRng rng, SessionTiming timing)
    : id_(std::move(id)),
      session_id_(std::move(session_id)),
      query_(std::move(query)),
      m_(m),
      shared_schema_(shared_schema),
      rng_(rng),
      timing_(timing),
      keypair_(crypto::keypair_from_rng(rng_)) {
    if (m_ < kMinKeySetSize) throw KeySetTooSmall("m=" + std::to_string(m_));
}

PartyOutput ClientNode::start(const std::string& mediator_id) {
    if (phase_ != ClientPhase::Idle) throw ProtocolOrderError("start() outside Idle");
    mediator_id_ = mediator_id;
    ordered_json payload;
    payload["query"] = query_to_json(query_);
    payload["m"] = m_;
    Envelope env{session_id_, {Role::Client, id_}, {Role::Mediator, mediator_id_},
                 MsgType::Query, 0, to_bytes(payload)};
    phase_ = ClientPhase::AwaitingCount;
    return {{std::move(env)}, {{"timeout:count", timing_.ack_deadline + timing_.phase_timeout}}};
}

void ClientNode::fail(const std::string& why) {
    phase_ = ClientPhase::Failed;
    failure_ = why;
}

PartyOutput ClientNode::on_message(const Envelope& env, uint64_t) {
    if (phase_ == ClientPhase::Done || phase_ == ClientPhase::Failed) {
        return {{}, {}, {env}};
    }
    switch (env.type) {
        case MsgType::Count: return handle_count(env);
        case MsgType::KeySet: return handle_keyset(env);
        case MsgType::Bundle: return handle_bundle(env);
        default:
            throw ProtocolOrderError(std::string("client got ") + msg_type_name(env.type));
    }
}

PartyOutput ClientNode::handle_count(const Envelope& env) {
    if (phase_ != ClientPhase::AwaitingCount) {
        throw ProtocolOrderError("count outside AwaitingCount");
    }
    n_ = parse_payload(env).at("n").get<size_t>();
    if (n_ == 0) {
        fail("NoProviders");
        Envelope abort{session_id_, {Role::Client, id_}, {Role::Mediator, mediator_id_},
                       MsgType::Abort, 0, to_bytes(ordered_json{{"reason", "NoProviders"}})};
        return {{std::move(abort)}, {}};
    }
    phase_ = ClientPhase::AwaitingKeySets;
    return {{}, {{"timeout:keysets", timing_.phase_timeout}}};
}

PartyOutput ClientNode::handle_keyset(const Envelope& env) {
    if (phase_ != ClientPhase::AwaitingKeySets) {
        throw ProtocolOrderError("keyset outside AwaitingKeySets");
    }
    KeySet ks = KeySet::from_json(parse_payload(env));
    if (ks.provider_alias != env.from.id) {
        throw AliasMismatch("keyset alias vs envelope sender");
    }
    if (ks.size() != m_) throw SchemaError("keyset size disagrees with session m");
    keysets_.emplace(ks.provider_alias, std::move(ks));
    if (keysets_.size() < n_) return {};

    PartyOutput out;
    for (const auto& [alias, keyset] : keysets_) {
        Selection sel = select_index(keyset, rng_);
        BlindedResponse blinded = blind(keyset, sel, keypair_.public_key, rng_);
        selections_.emplace(alias, sel);
        out.messages.push_back(Envelope{session_id_, {Role::Client, id_},
                                        {Role::Mediator, mediator_id_},
                                        MsgType::BlindedResponse, 0,
                                        to_bytes(blinded.to_json())});
    }
    phase_ = ClientPhase::AwaitingBundles;
    out.timers.push_back({"timeout:bundles", timing_.phase_timeout});
    return out;
}

PartyOutput ClientNode::handle_bundle(const Envelope& env) {
    if (phase_ != ClientPhase::AwaitingBundles) {
        throw ProtocolOrderError("bundle outside AwaitingBundles");
    }
    EncryptedBundle bundle = EncryptedBundle::from_json(parse_payload(env));
    if (bundle.provider_alias != env.from.id) {
        throw AliasMismatch("bundle alias vs envelope sender");
    }
    bundles_.emplace(bundle.provider_alias, std::move(bundle));
    if (bundles_.size() < n_) return {};

    std::vector<Table> tables;
    tables.reserve(bundles_.size());
    for (const auto& [alias, b] : bundles_) {
        crypto::Bytes plain;
        try {
            plain = open_bundle(b, keypair_);
        } catch (const NoDecryptableEntry&) {
            fail("DecryptFailure");
            return {};
        }
        tables.push_back(parse_csv_with_header(std::string(plain.begin(), plain.end()),
                                               shared_schema_));
    }
    result_ = consolidate(tables, rng_);
    phase_ = ClientPhase::Done;
    return {};
}

PartyOutput ClientNode::on_timer(const std::string& name, uint64_t) {
    bool stuck = (name == "timeout:count" && phase_ == ClientPhase::AwaitingCount) ||
                 (name == "timeout:keysets" && phase_ == ClientPhase::AwaitingKeySets) ||
                 (name == "timeout:bundles" && phase_ == ClientPhase::AwaitingBundles);
    if (!stuck) return {};
    fail("PartialProviderFailure");
    Envelope abort{session_id_, {Role::Client, id_}, {Role::Mediator, mediator_id_},
                   MsgType::Abort, 0,
                   to_bytes(ordered_json{{"reason", "PartialProviderFailure"}})};
    return {{std::move(abort)}, {}};
}

// ---------------------------------------------------------------------------
// Mediator
// ---------------------------------------------------------------------------

MediatorNode::MediatorNode(std::string id, SessionTiming timing)
    : id_(std::move(id)), timing_(timing) {}

void MediatorNode::register_provider(const std::string& provider_id) {
    registry_.insert(provider_id);
}

PartyOutput MediatorNode::on_message(const Envelope& env, uint64_t) {
    if (env.type == MsgType::Query && env.from.role == Role::Client) {
        if (session_) throw ProtocolOrderError("session already open");
        session_ = Session{env.session_id, env.from.id};
        session_->m = parse_payload(env).value("m", size_t{0});
        PartyOutput out;
        // Broadcast to every registered provider; payload bytes unchanged.
        for (const auto& pid : registry_) {
            out.messages.push_back(Envelope{env.session_id, {Role::Mediator, id_},
                                            {Role::Provider, pid}, MsgType::Query, 0,
                                            env.payload});
        }
        out.timers.push_back({"ack_deadline", timing_.ack_deadline});
        return out;
    }

    if (!session_ || env.session_id != session_->session_id) {
        throw UnknownSession("message for session '" + env.session_id + "'");
    }

    switch (env.type) {
        case MsgType::Ack: {
            if (!registry_.count(env.from.id)) {
                throw UnknownProvider("ack from '" + env.from.id + "'");
            }
            if (session_->count_sent) {
                return {{}, {}, {env}};  // late ack: N is already committed
            }
            std::string alias = parse_payload(env).at("alias").get<std::string>();
            if (!session_->alias_of.count(env.from.id)) {
                session_->acked.push_back(env.from.id);
                session_->alias_of[env.from.id] = alias;
                session_->id_of[alias] = env.from.id;
            }
            return {};
        }
        case MsgType::KeySet:
            return {{relay_to_client(env, session_->alias_of.at(env.from.id))}, {}};
        case MsgType::Bundle:
            return {{relay_to_client(env, session_->alias_of.at(env.from.id))}, {}};
        case MsgType::BlindedResponse:
            return {{relay_to_provider(env)}, {}};
        case MsgType::Abort:
            return {};
        default:
            throw ProtocolOrderError(std::string("mediator got ") + msg_type_name(env.type));
    }
}

Envelope MediatorNode::relay_to_client(const Envelope& inbound, const std::string& alias) const {
    if (!registry_.count(inbound.from.id)) {
        throw UnknownProvider("'" + inbound.from.id + "'");
    }
    // Identity is replaced by the session alias; payload bytes untouched.
    return Envelope{inbound.session_id, {Role::Provider, alias},
                    {Role::Client, session_->client_id}, inbound.type, 0, inbound.payload};
}

Envelope MediatorNode::relay_to_provider(const Envelope& inbound) const {
    std::string alias = parse_payload(inbound).at("alias").get<std::string>();
    auto it = session_->id_of.find(alias);
    if (it == session_->id_of.end()) {
        throw UnknownSession("no provider owns alias '" + alias + "'");
    }
    // Provider-bound: the sender is identified by session id only.
    return Envelope{inbound.session_id, {Role::Client, inbound.session_id},
                    {Role::Provider, it->second}, inbound.type, 0, inbound.payload};
}

PartyOutput MediatorNode::on_timer(const std::string& name, uint64_t) {
    if (name != "ack_deadline" || !session_ || session_->count_sent) return {};
    session_->count_sent = true;
    ordered_json payload;
    payload["n"] = session_->acked.size();
    Envelope count{session_->session_id, {Role::Mediator, id_},
                   {Role::Client, session_->client_id}, MsgType::Count, 0,
                   to_bytes(payload)};
    return {{std::move(count)}, {}};
}

// ---------------------------------------------------------------------------
// Provider
// ---------------------------------------------------------------------------

ProviderNode::ProviderNode(std::string id, Table store, PerturbationPolicy policy,
                           SeededRng rng, SessionTiming timing)
    : id_(std::move(id)),
      store_(std::move(store)),
      policy_(std::move(policy)),
      rng_(rng),
      timing_(timing) {
    policy_.validate(store_.schema);
}

PartyOutput ProviderNode::on_message(const Envelope& env, uint64_t) {
    if (phase_ == ProviderPhase::Done || phase_ == ProviderPhase::Failed) {
        return {{}, {}, {env}};
    }
    switch (env.type) {
        case MsgType::Query: return handle_query(env);
        case MsgType::BlindedResponse: return handle_blinded(env);
        default:
            throw ProtocolOrderError(std::string("provider got ") + msg_type_name(env.type));
    }
}

PartyOutput ProviderNode::handle_query(const Envelope& env) {
    if (phase_ != ProviderPhase::AwaitingQuery) {
        throw ProtocolOrderError("query outside AwaitingQuery");
    }
    json payload = parse_payload(env);
    Query query = query_from_json(payload.at("query"));
    size_t m = payload.at("m").get<size_t>();

    Table matched = match_query(store_, query);
    if (matched.rows.empty()) {
        return {};  // no match: stay silent, send no ack
    }

    session_id_ = env.session_id;
    mediator_id_ = env.from.id;
    alias_ = rng_.hex_token(8);
    matched_ = std::move(matched);
    keyset_ = generate_key_set(m, alias_, rng_);
    phase_ = ProviderPhase::Acked;

    ordered_json ack_payload;
    ack_payload["alias"] = alias_;
    Envelope ack{session_id_, {Role::Provider, id_}, {Role::Mediator, mediator_id_},
                 MsgType::Ack, 0, to_bytes(ack_payload)};
    // Keys are released only after the mediator's count deadline so the
    // transcript follows the step order: acks, count, then key sets.
    return {{std::move(ack)},
            {{"release_keys", timing_.ack_deadline + timing_.keyset_delay}}};
}

PartyOutput ProviderNode::on_timer(const std::string& name, uint64_t) {
    if (name != "release_keys" || phase_ != ProviderPhase::Acked) return {};
    if (silent_after_ack_) return {};
    phase_ = ProviderPhase::KeysSent;
    Envelope keys{session_id_, {Role::Provider, id_}, {Role::Mediator, mediator_id_},
                  MsgType::KeySet, 0, to_bytes(keyset_->to_json())};
    return {{std::move(keys)}, {}};
}

PartyOutput ProviderNode::handle_blinded(const Envelope& env) {
    if (phase_ != ProviderPhase::KeysSent) {
        throw ProtocolOrderError("blinded response outside KeysSent");
    }
    BlindedResponse blinded = BlindedResponse::from_json(parse_payload(env));
    std::vector<crypto::Bytes> candidates;
    try {
        candidates = unwrap(*keyset_, blinded);
    } catch (const TamperedResponse&) {
        phase_ = ProviderPhase::Failed;
        throw;
    }

    Table perturbed = perturb_table(*matched_, policy_, rng_);
    std::string csv = to_csv(perturbed);
    EncryptedBundle bundle = multi_encrypt(crypto::Bytes(csv.begin(), csv.end()),
                                           alias_, candidates, rng_);
    phase_ = ProviderPhase::Done;
    Envelope out{session_id_, {Role::Provider, id_}, {Role::Mediator, mediator_id_},
                 MsgType::Bundle, 0, to_bytes(bundle.to_json())};
    return {{std::move(out)}, {}};
}

}  // namespace fedq
