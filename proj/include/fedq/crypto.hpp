#ifndef FEDQ_CRYPTO_HPP
#define FEDQ_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedq/rng.hpp"

namespace fedq::crypto {

using Bytes = std::vector<unsigned char>;

constexpr size_t kSymKeyBytes = 32;   // crypto_secretbox key
constexpr size_t kPublicKeyBytes = 32;  // X25519

struct Keypair {
    Bytes public_key;   // 32 bytes
    Bytes secret_key;   // 32 bytes; never serialized onto the wire
};

// All key material and nonces are drawn from the caller's seeded source so
// ciphertext bytes are reproducible run to run.
Keypair keypair_from_rng(SeededRng& rng);

// Authenticated symmetric encryption (XSalsa20-Poly1305); output is
// nonce || ciphertext. Opening a tampered box fails.
Bytes secretbox_seal(std::span<const unsigned char> key,
                     std::span<const unsigned char> plaintext, SeededRng& rng);
std::optional<Bytes> secretbox_open(std::span<const unsigned char> key,
                                    std::span<const unsigned char> boxed);

// Hybrid public-key encryption (sealed box: ephemeral X25519 + secretbox),
// with the ephemeral key drawn from the seeded source. Output is
// ephemeral_pk || box; decryptable only by the recipient's secret key, and
// failure is detectable.
Bytes seal_to(std::span<const unsigned char> recipient_pk,
              std::span<const unsigned char> plaintext, SeededRng& rng);
std::optional<Bytes> open_sealed(const Keypair& recipient,
                                 std::span<const unsigned char> sealed);

std::string to_base64(std::span<const unsigned char> data);
Bytes from_base64(const std::string& b64);

}  // namespace fedq::crypto

#endif
