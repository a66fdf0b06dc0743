#include "fedq/crypto.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace fedq::crypto {

namespace {
void ensure_init() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    });
}
}  // namespace

Keypair keypair_from_rng(SeededRng& rng) {
    ensure_init();
    auto seed = rng.bytes(crypto_box_SEEDBYTES);
    Keypair kp;
    kp.public_key.resize(crypto_box_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_box_SECRETKEYBYTES);
    crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

Bytes secretbox_seal(std::span<const unsigned char> key,
                     std::span<const unsigned char> plaintext, SeededRng& rng) {
    ensure_init();
    if (key.size() != crypto_secretbox_KEYBYTES) {
        throw std::invalid_argument("secretbox key must be 32 bytes");
    }
    Bytes out(crypto_secretbox_NONCEBYTES + plaintext.size() + crypto_secretbox_MACBYTES);
    rng.fill(out.data(), crypto_secretbox_NONCEBYTES);
    crypto_secretbox_easy(out.data() + crypto_secretbox_NONCEBYTES, plaintext.data(),
                          plaintext.size(), out.data(), key.data());
    return out;
}

std::optional<Bytes> secretbox_open(std::span<const unsigned char> key,
                                    std::span<const unsigned char> boxed) {
    ensure_init();
    if (key.size() != crypto_secretbox_KEYBYTES) return std::nullopt;
    if (boxed.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES) {
        return std::nullopt;
    }
    Bytes plain(boxed.size() - crypto_secretbox_NONCEBYTES - crypto_secretbox_MACBYTES);
    if (crypto_secretbox_open_easy(plain.data(), boxed.data() + crypto_secretbox_NONCEBYTES,
                                   boxed.size() - crypto_secretbox_NONCEBYTES,
                                   boxed.data(), key.data()) != 0) {
        return std::nullopt;
    }
    return plain;
}

// Sealed-box wire format (ephemeral_pk || crypto_box with nonce =
// blake2b(ephemeral_pk || recipient_pk)), built by hand so the ephemeral key
// comes from the seeded source. Compatible with crypto_box_seal_open.
Bytes seal_to(std::span<const unsigned char> recipient_pk,
              std::span<const unsigned char> plaintext, SeededRng& rng) {
    ensure_init();
    if (recipient_pk.size() != crypto_box_PUBLICKEYBYTES) {
        throw std::invalid_argument("recipient public key must be 32 bytes");
    }
    Keypair eph = keypair_from_rng(rng);

    unsigned char nonce[crypto_box_NONCEBYTES];
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, sizeof nonce);
    crypto_generichash_update(&st, eph.public_key.data(), eph.public_key.size());
    crypto_generichash_update(&st, recipient_pk.data(), recipient_pk.size());
    crypto_generichash_final(&st, nonce, sizeof nonce);

    Bytes out(crypto_box_PUBLICKEYBYTES + plaintext.size() + crypto_box_MACBYTES);
    std::copy(eph.public_key.begin(), eph.public_key.end(), out.begin());
    if (crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES, plaintext.data(),
                        plaintext.size(), nonce, recipient_pk.data(),
                        eph.secret_key.data()) != 0) {
        throw std::runtime_error("crypto_box_easy failed");
    }
    return out;
}

std::optional<Bytes> open_sealed(const Keypair& recipient,
                                 std::span<const unsigned char> sealed) {
    ensure_init();
    if (sealed.size() < crypto_box_SEALBYTES) return std::nullopt;
    Bytes plain(sealed.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(plain.data(), sealed.data(), sealed.size(),
                             recipient.public_key.data(),
                             recipient.secret_key.data()) != 0) {
        return std::nullopt;
    }
    return plain;
}

std::string to_base64(std::span<const unsigned char> data) {
    ensure_init();
    std::string out(sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL),
                    '\0');
    sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                      sodium_base64_VARIANT_ORIGINAL);
    out.resize(out.find('\0') == std::string::npos ? out.size() : out.find('\0'));
    return out;
}

Bytes from_base64(const std::string& b64) {
    ensure_init();
    Bytes out(b64.size());
    size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), b64.data(), b64.size(), nullptr, &len,
                          nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
        throw std::invalid_argument("invalid base64");
    }
    out.resize(len);
    return out;
}

}  // namespace fedq::crypto
