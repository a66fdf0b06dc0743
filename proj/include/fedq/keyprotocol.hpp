#ifndef FEDQ_KEYPROTOCOL_HPP
#define FEDQ_KEYPROTOCOL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedq/crypto.hpp"
#include "fedq/rng.hpp"

#include <nlohmann/json.hpp>

namespace fedq {

constexpr size_t kMinKeySetSize = 2;

struct SymmetricKey {
    std::array<unsigned char, crypto::kSymKeyBytes> bytes{};
    bool operator==(const SymmetricKey&) const = default;
};

// An ordered set of m symmetric keys a provider offers the client; the
// client secretly selects exactly one.
struct KeySet {
    std::string provider_alias;
    std::vector<SymmetricKey> keys;

    size_t size() const { return keys.size(); }
    nlohmann::ordered_json to_json() const;
    static KeySet from_json(const nlohmann::json& j);
};

struct Selection {
    std::string provider_alias;
    size_t index = 0;

    Selection(std::string alias, size_t idx, size_t m);
};

// m authenticated ciphertexts; slot j (secret) carries the client's public
// key, every other slot a fresh decoy public key. All slots decrypt under
// their positional keys to identically-distributed well-formed keys, so the
// provider's unwrapped view carries no information about j.
struct BlindedResponse {
    std::string provider_alias;
    std::vector<crypto::Bytes> slots;

    nlohmann::ordered_json to_json() const;
    static BlindedResponse from_json(const nlohmann::json& j);
};

// The same payload encrypted to every candidate public key; exactly one is
// the client's.
struct EncryptedBundle {
    std::string provider_alias;
    std::vector<crypto::Bytes> payloads;

    nlohmann::ordered_json to_json() const;
    static EncryptedBundle from_json(const nlohmann::json& j);
};

KeySet generate_key_set(size_t m, const std::string& alias, SeededRng& rng);

Selection select_index(const KeySet& keyset, SeededRng& rng);

BlindedResponse blind(const KeySet& keyset, const Selection& sel,
                      const crypto::Bytes& client_pub, SeededRng& rng);

// Provider side: decrypt every slot under its positional key. Throws
// TamperedResponse if any slot fails authentication, MalformedCandidate if a
// plaintext is not a well-formed public key.
std::vector<crypto::Bytes> unwrap(const KeySet& keyset, const BlindedResponse& blinded);

EncryptedBundle multi_encrypt(const crypto::Bytes& payload, const std::string& alias,
                              const std::vector<crypto::Bytes>& candidates, SeededRng& rng);

// Client side: exactly one payload must open. Throws NoDecryptableEntry /
// MultipleDecryptable otherwise.
crypto::Bytes open_bundle(const EncryptedBundle& bundle, const crypto::Keypair& keypair);

}  // namespace fedq

#endif
