#include "fedq/keyprotocol.hpp"

#include <algorithm>
#include <set>

#include "fedq/errors.hpp"

namespace fedq {

using crypto::Bytes;

namespace {
nlohmann::ordered_json slots_to_json(const std::string& alias,
                                     const std::vector<Bytes>& items,
                                     const char* field) {
    nlohmann::ordered_json j;
    j["alias"] = alias;
    j["m"] = items.size();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& it : items) arr.push_back(crypto::to_base64(it));
    j[field] = arr;
    return j;
}

std::vector<Bytes> slots_from_json(const nlohmann::json& j, const char* field) {
    std::vector<Bytes> items;
    for (const auto& s : j.at(field)) items.push_back(crypto::from_base64(s.get<std::string>()));
    if (j.at("m").get<size_t>() != items.size()) {
        throw SchemaError(std::string("'m' disagrees with '") + field + "' length");
    }
    return items;
}
}  // namespace

nlohmann::ordered_json KeySet::to_json() const {
    std::vector<Bytes> raw;
    raw.reserve(keys.size());
    for (const auto& k : keys) raw.emplace_back(k.bytes.begin(), k.bytes.end());
    return slots_to_json(provider_alias, raw, "keys");
}

KeySet KeySet::from_json(const nlohmann::json& j) {
    KeySet ks;
    ks.provider_alias = j.at("alias").get<std::string>();
    for (const auto& raw : slots_from_json(j, "keys")) {
        if (raw.size() != crypto::kSymKeyBytes) throw SchemaError("bad key length");
        SymmetricKey k;
        std::copy(raw.begin(), raw.end(), k.bytes.begin());
        ks.keys.push_back(k);
    }
    return ks;
}

nlohmann::ordered_json BlindedResponse::to_json() const {
    return slots_to_json(provider_alias, slots, "slots");
}

BlindedResponse BlindedResponse::from_json(const nlohmann::json& j) {
    return BlindedResponse{j.at("alias").get<std::string>(), slots_from_json(j, "slots")};
}

nlohmann::ordered_json EncryptedBundle::to_json() const {
    return slots_to_json(provider_alias, payloads, "payloads");
}

EncryptedBundle EncryptedBundle::from_json(const nlohmann::json& j) {
    return EncryptedBundle{j.at("alias").get<std::string>(), slots_from_json(j, "payloads")};
}

Selection::Selection(std::string alias, size_t idx, size_t m)
    : provider_alias(std::move(alias)), index(idx) {
    if (idx >= m) {
        throw IndexOutOfRange("selection index " + std::to_string(idx) +
                              " not below m=" + std::to_string(m));
    }
}

KeySet generate_key_set(size_t m, const std::string& alias, SeededRng& rng) {
    if (m < kMinKeySetSize) {
        throw KeySetTooSmall("m=" + std::to_string(m) +
                             "; selection hiding needs at least 2 keys");
    }
    KeySet ks;
    ks.provider_alias = alias;
    std::set<std::array<unsigned char, crypto::kSymKeyBytes>> seen;
    while (ks.keys.size() < m) {
        SymmetricKey k;
        rng.fill(k.bytes.data(), k.bytes.size());
        if (seen.insert(k.bytes).second) ks.keys.push_back(k);
    }
    return ks;
}

Selection select_index(const KeySet& keyset, SeededRng& rng) {
    return Selection(keyset.provider_alias, rng.below(keyset.size()), keyset.size());
}

BlindedResponse blind(const KeySet& keyset, const Selection& sel,
                      const Bytes& client_pub, SeededRng& rng) {
    if (sel.provider_alias != keyset.provider_alias) {
        throw AliasMismatch(sel.provider_alias + " vs " + keyset.provider_alias);
    }
    if (sel.index >= keyset.size()) throw IndexOutOfRange("selection beyond key set");
    BlindedResponse out;
    out.provider_alias = keyset.provider_alias;
    out.slots.reserve(keyset.size());
    for (size_t i = 0; i < keyset.size(); ++i) {
        Bytes plain;
        if (i == sel.index) {
            plain = client_pub;
        } else {
            // Decoy: the public half of a fresh keypair, indistinguishable
            // from the real one by distribution.
            plain = crypto::keypair_from_rng(rng).public_key;
        }
        out.slots.push_back(crypto::secretbox_seal(keyset.keys[i].bytes, plain, rng));
    }
    return out;
}

std::vector<Bytes> unwrap(const KeySet& keyset, const BlindedResponse& blinded) {
    if (blinded.provider_alias != keyset.provider_alias) {
        throw AliasMismatch(blinded.provider_alias + " vs " + keyset.provider_alias);
    }
    if (blinded.slots.size() != keyset.size()) {
        throw MalformedCandidate("expected " + std::to_string(keyset.size()) +
                                 " slots, got " + std::to_string(blinded.slots.size()));
    }
    std::vector<Bytes> candidates;
    candidates.reserve(keyset.size());
    for (size_t i = 0; i < keyset.size(); ++i) {
        auto plain = crypto::secretbox_open(keyset.keys[i].bytes, blinded.slots[i]);
        if (!plain) throw TamperedResponse("slot " + std::to_string(i) + " failed authentication");
        if (plain->size() != crypto::kPublicKeyBytes) {
            throw MalformedCandidate("slot " + std::to_string(i) +
                                     " plaintext is not a public key");
        }
        candidates.push_back(std::move(*plain));
    }
    return candidates;
}

EncryptedBundle multi_encrypt(const Bytes& payload, const std::string& alias,
                              const std::vector<Bytes>& candidates, SeededRng& rng) {
    if (candidates.size() < kMinKeySetSize) {
        throw KeySetTooSmall("need at least 2 candidate keys");
    }
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].size() != crypto::kPublicKeyBytes) {
            throw MalformedCandidate("candidate " + std::to_string(i));
        }
    }
    EncryptedBundle bundle;
    bundle.provider_alias = alias;
    bundle.payloads.reserve(candidates.size());
    for (const auto& pk : candidates) {
        bundle.payloads.push_back(crypto::seal_to(pk, payload, rng));
    }
    return bundle;
}

Bytes open_bundle(const EncryptedBundle& bundle, const crypto::Keypair& keypair) {
    Bytes result;
    size_t opened = 0;
    for (const auto& ct : bundle.payloads) {
        if (auto plain = crypto::open_sealed(keypair, ct)) {
            ++opened;
            result = std::move(*plain);
        }
    }
    if (opened == 0) throw NoDecryptableEntry("no payload opened with this keypair");
    if (opened > 1) {
        throw MultipleDecryptable(std::to_string(opened) + " payloads opened; bundle malformed");
    }
    return result;
}

}  // namespace fedq
