#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedq/errors.hpp"
#include "fedq/roles.hpp"

using namespace fedq;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

crypto::Bytes to_bytes(const ordered_json& j) {
    std::string s = j.dump();
    return crypto::Bytes(s.begin(), s.end());
}

json payload_of(const Envelope& env) {
    return json::parse(env.payload.begin(), env.payload.end());
}

Envelope count_msg(size_t n) {
    return Envelope{"s1", {Role::Mediator, "med"}, {Role::Client, "client"},
                    MsgType::Count, 0, to_bytes(ordered_json{{"n", n}})};
}

Query any_query() { return Query{}; }

Envelope query_broadcast(size_t m) {
    ordered_json payload;
    payload["query"] = query_to_json(any_query());
    payload["m"] = m;
    return Envelope{"s1", {Role::Mediator, "med"}, {Role::Provider, "prov"},
                    MsgType::Query, 0, to_bytes(payload)};
}

}  // namespace

TEST_CASE("client state machine") {
    ClientNode client("client", "s1", any_query(), 4, Schema::hospital(), SeededRng(1));

    SUBCASE("start emits the query and moves to AwaitingCount") {
        PartyOutput out = client.start("med");
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].type == MsgType::Query);
        CHECK(out.messages[0].to.id == "med");
        CHECK(payload_of(out.messages[0]).at("m") == 4);
        CHECK(client.phase() == ClientPhase::AwaitingCount);
    }
    SUBCASE("count stores N") {
        client.start("med");
        client.on_message(count_msg(3), 0);
        CHECK(client.n() == 3);
        CHECK(client.phase() == ClientPhase::AwaitingKeySets);
    }
    SUBCASE("count of zero fails the session as NoProviders") {
        client.start("med");
        PartyOutput out = client.on_message(count_msg(0), 0);
        CHECK(client.phase() == ClientPhase::Failed);
        CHECK(client.failure() == "NoProviders");
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].type == MsgType::Abort);
    }
    SUBCASE("bundle before key sets handled is a protocol order error") {
        client.start("med");
        client.on_message(count_msg(2), 0);
        Envelope bundle{"s1", {Role::Provider, "alias"}, {Role::Client, "client"},
                        MsgType::Bundle, 0, {}};
        CHECK_THROWS_AS(client.on_message(bundle, 0), ProtocolOrderError);
    }
    SUBCASE("event in Idle phase is a protocol order error") {
        CHECK_THROWS_AS(client.on_message(count_msg(1), 0), ProtocolOrderError);
    }
    SUBCASE("all key sets trigger one blinded response per alias") {
        client.start("med");
        client.on_message(count_msg(2), 0);
        SeededRng provider_rng(9);
        PartyOutput out;
        for (const auto* alias : {"a1", "a2"}) {
            KeySet ks = generate_key_set(4, alias, provider_rng);
            Envelope env{"s1", {Role::Provider, alias}, {Role::Client, "client"},
                         MsgType::KeySet, 0, to_bytes(ks.to_json())};
            out = client.on_message(env, 0);
        }
        CHECK(client.phase() == ClientPhase::AwaitingBundles);
        REQUIRE(out.messages.size() == 2);
        for (const auto& msg : out.messages) {
            CHECK(msg.type == MsgType::BlindedResponse);
            CHECK(msg.to.id == "med");
        }
    }
    SUBCASE("phase timeout fails the session") {
        client.start("med");
        client.on_message(count_msg(2), 0);
        client.on_timer("timeout:keysets", 99999);
        CHECK(client.phase() == ClientPhase::Failed);
        CHECK(client.failure() == "PartialProviderFailure");
    }
    SUBCASE("timer for an already-passed phase is ignored") {
        client.start("med");
        client.on_message(count_msg(2), 0);
        client.on_timer("timeout:count", 99999);
        CHECK(client.phase() == ClientPhase::AwaitingKeySets);
    }
}

TEST_CASE("mediator state machine") {
    MediatorNode med("med");
    for (const auto* p : {"prov_a", "prov_b", "prov_c"}) med.register_provider(p);

    ordered_json query_payload;
    query_payload["query"] = query_to_json(any_query());
    query_payload["m"] = 4;
    Envelope query{"s1", {Role::Client, "client"}, {Role::Mediator, "med"},
                   MsgType::Query, 0, to_bytes(query_payload)};

    auto ack_from = [&](const std::string& pid, const std::string& alias) {
        return Envelope{"s1", {Role::Provider, pid}, {Role::Mediator, "med"},
                        MsgType::Ack, 0, to_bytes(ordered_json{{"alias", alias}})};
    };

    SUBCASE("query broadcast reaches every registered provider, payload unchanged") {
        PartyOutput out = med.on_message(query, 0);
        REQUIRE(out.messages.size() == 3);
        for (const auto& msg : out.messages) {
            CHECK(msg.type == MsgType::Query);
            CHECK(msg.payload == query.payload);
        }
        REQUIRE(out.timers.size() == 1);
        CHECK(out.timers[0].name == "ack_deadline");
    }
    SUBCASE("three acks then deadline gives Count N=3") {
        med.on_message(query, 0);
        med.on_message(ack_from("prov_a", "a1"), 1);
        med.on_message(ack_from("prov_b", "a2"), 1);
        med.on_message(ack_from("prov_c", "a3"), 1);
        PartyOutput out = med.on_timer("ack_deadline", 2000);
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].type == MsgType::Count);
        CHECK(payload_of(out.messages[0]).at("n") == 3);
    }
    SUBCASE("zero acks gives Count N=0") {
        med.on_message(query, 0);
        PartyOutput out = med.on_timer("ack_deadline", 2000);
        REQUIRE(out.messages.size() == 1);
        CHECK(payload_of(out.messages[0]).at("n") == 0);
    }
    SUBCASE("ack after deadline is dropped") {
        med.on_message(query, 0);
        med.on_message(ack_from("prov_a", "a1"), 1);
        med.on_timer("ack_deadline", 2000);
        PartyOutput out = med.on_message(ack_from("prov_b", "a2"), 2001);
        CHECK(out.messages.empty());
        REQUIRE(out.drops.size() == 1);
        CHECK(med.n() == 1);
    }
    SUBCASE("ack from unregistered party") {
        med.on_message(query, 0);
        CHECK_THROWS_AS(med.on_message(ack_from("intruder", "a9"), 1), UnknownProvider);
    }
    SUBCASE("keyset relay replaces identity with alias, payload bytes identical") {
        med.on_message(query, 0);
        med.on_message(ack_from("prov_b", "a7f3"), 1);
        SeededRng rng(5);
        KeySet ks = generate_key_set(4, "a7f3", rng);
        Envelope keyset{"s1", {Role::Provider, "prov_b"}, {Role::Mediator, "med"},
                        MsgType::KeySet, 0, to_bytes(ks.to_json())};
        PartyOutput out = med.on_message(keyset, 2100);
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].from.id == "a7f3");
        CHECK(out.messages[0].to.id == "client");
        CHECK(out.messages[0].payload == keyset.payload);
    }
    SUBCASE("blinded response routes to exactly the provider owning the alias") {
        med.on_message(query, 0);
        med.on_message(ack_from("prov_a", "a1"), 1);
        med.on_message(ack_from("prov_b", "a2"), 1);
        Envelope blinded{"s1", {Role::Client, "client"}, {Role::Mediator, "med"},
                         MsgType::BlindedResponse, 0,
                         to_bytes(ordered_json{{"alias", "a2"}, {"m", 2},
                                               {"slots", json::array()}})};
        PartyOutput out = med.on_message(blinded, 2200);
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].to.id == "prov_b");
        // provider-bound sender carries the session id only
        CHECK(out.messages[0].from.id == "s1");
        CHECK(out.messages[0].payload == blinded.payload);
    }
    SUBCASE("unknown session") {
        med.on_message(query, 0);
        Envelope stray{"other", {Role::Provider, "prov_a"}, {Role::Mediator, "med"},
                       MsgType::Ack, 0, to_bytes(ordered_json{{"alias", "x"}})};
        CHECK_THROWS_AS(med.on_message(stray, 1), UnknownSession);
    }
}

TEST_CASE("provider state machine") {
    SUBCASE("matching query yields ack then key set after the deadline") {
        ProviderNode prov("prov", fixture_hospital_a(),
                          PerturbationPolicy::hospital_default(), SeededRng(3));
        ordered_json payload;
        Query q{"diseasename", QueryOp::Eq, "Swine flu"};
        payload["query"] = query_to_json(q);
        payload["m"] = 4;
        Envelope env{"s1", {Role::Mediator, "med"}, {Role::Provider, "prov"},
                     MsgType::Query, 0, to_bytes(payload)};
        PartyOutput out = prov.on_message(env, 0);
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].type == MsgType::Ack);
        CHECK(prov.phase() == ProviderPhase::Acked);
        REQUIRE(out.timers.size() == 1);

        PartyOutput keys = prov.on_timer("release_keys", 2010);
        REQUIRE(keys.messages.size() == 1);
        CHECK(keys.messages[0].type == MsgType::KeySet);
        CHECK(prov.phase() == ProviderPhase::KeysSent);
        KeySet ks = KeySet::from_json(payload_of(keys.messages[0]));
        CHECK(ks.size() == 4);
        CHECK(ks.provider_alias == prov.alias());
    }
    SUBCASE("zero matching rows: total silence") {
        ProviderNode prov("prov", fixture_hospital_a(),
                          PerturbationPolicy::hospital_default(), SeededRng(3));
        ordered_json payload;
        Query q{"diseasename", QueryOp::Eq, "Malaria"};
        payload["query"] = query_to_json(q);
        payload["m"] = 4;
        Envelope env{"s1", {Role::Mediator, "med"}, {Role::Provider, "prov"},
                     MsgType::Query, 0, to_bytes(payload)};
        PartyOutput out = prov.on_message(env, 0);
        CHECK(out.messages.empty());
        CHECK(prov.phase() == ProviderPhase::AwaitingQuery);
    }
    SUBCASE("tampered blinded response fails the provider") {
        ProviderNode prov("prov", fixture_hospital_a(),
                          PerturbationPolicy::hospital_default(), SeededRng(3));
        prov.on_message(query_broadcast(4), 0);
        PartyOutput keys = prov.on_timer("release_keys", 2010);
        KeySet ks = KeySet::from_json(payload_of(keys.messages[0]));

        SeededRng client_rng(8);
        crypto::Keypair client = crypto::keypair_from_rng(client_rng);
        Selection sel = select_index(ks, client_rng);
        BlindedResponse blinded = blind(ks, sel, client.public_key, client_rng);
        blinded.slots[0][10] ^= 0x01;
        Envelope env{"s1", {Role::Client, "s1"}, {Role::Provider, "prov"},
                     MsgType::BlindedResponse, 0, to_bytes(blinded.to_json())};
        CHECK_THROWS_AS(prov.on_message(env, 2100), TamperedResponse);
        CHECK(prov.phase() == ProviderPhase::Failed);
    }
    SUBCASE("honest blinded response yields a bundle the client can open") {
        ProviderNode prov("prov", fixture_hospital_a(),
                          PerturbationPolicy::hospital_default(0.0), SeededRng(3));
        prov.on_message(query_broadcast(4), 0);
        PartyOutput keys = prov.on_timer("release_keys", 2010);
        KeySet ks = KeySet::from_json(payload_of(keys.messages[0]));

        SeededRng client_rng(8);
        crypto::Keypair client = crypto::keypair_from_rng(client_rng);
        Selection sel = select_index(ks, client_rng);
        BlindedResponse blinded = blind(ks, sel, client.public_key, client_rng);
        Envelope env{"s1", {Role::Client, "s1"}, {Role::Provider, "prov"},
                     MsgType::BlindedResponse, 0, to_bytes(blinded.to_json())};
        PartyOutput out = prov.on_message(env, 2100);
        REQUIRE(out.messages.size() == 1);
        CHECK(out.messages[0].type == MsgType::Bundle);
        CHECK(prov.phase() == ProviderPhase::Done);

        EncryptedBundle bundle = EncryptedBundle::from_json(payload_of(out.messages[0]));
        crypto::Bytes plain = open_bundle(bundle, client);
        Table result = parse_csv_with_header(std::string(plain.begin(), plain.end()),
                                             Schema::hospital());
        CHECK(result.row_count() == 10);               // zero-noise full table
        CHECK(!result.schema.index_of("personid"));    // suppressed
    }
    SUBCASE("blinded response before keys sent is a protocol order error") {
        ProviderNode prov("prov", fixture_hospital_a(),
                          PerturbationPolicy::hospital_default(), SeededRng(3));
        Envelope env{"s1", {Role::Client, "s1"}, {Role::Provider, "prov"},
                     MsgType::BlindedResponse, 0,
                     to_bytes(ordered_json{{"alias", "x"}, {"m", 2},
                                           {"slots", json::array()}})};
        CHECK_THROWS_AS(prov.on_message(env, 0), ProtocolOrderError);
    }
}

TEST_CASE("consolidate") {
    Schema s;
    s.columns = {{"diseasename", ColumnKind::Categorical}, {"age", ColumnKind::Numeric}};
    Table a{s, {{std::string("Flu"), 30.0}, {std::string("Acne"), 40.0}}};
    Table b{s, {{std::string("Hives"), 50.0}, {std::string("Gout"), 60.0},
                {std::string("Colic"), 70.0}}};

    SUBCASE("union cardinality") {
        SeededRng rng(1);
        Table out = consolidate({a, b}, rng);
        CHECK(out.row_count() == 5);
    }
    SUBCASE("empty input gives an empty table") {
        SeededRng rng(1);
        CHECK(consolidate({}, rng).row_count() == 0);
    }
    SUBCASE("no provider-attribution column") {
        SeededRng rng(1);
        Table out = consolidate({a, b}, rng);
        CHECK(!out.schema.index_of("alias"));
        CHECK(!out.schema.index_of("provider"));
    }
    SUBCASE("schema mismatch") {
        Schema other;
        other.columns = {{"age", ColumnKind::Numeric}};
        Table c{other, {}};
        SeededRng rng(1);
        CHECK_THROWS_AS(consolidate({a, c}, rng), SchemaMismatch);
    }
    SUBCASE("rows are a permutation of the union") {
        SeededRng rng(2);
        Table out = consolidate({a, b}, rng);
        std::multiset<double> ages_in{30, 40, 50, 60, 70};
        std::multiset<double> ages_out;
        for (const auto& row : out.rows) ages_out.insert(cell_number(row[1]));
        CHECK(ages_in == ages_out);
    }
}
