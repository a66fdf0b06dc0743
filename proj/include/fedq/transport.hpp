#ifndef FEDQ_TRANSPORT_HPP
#define FEDQ_TRANSPORT_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedq/crypto.hpp"

#include <nlohmann/json.hpp>

namespace fedq {

enum class Role { Client, Mediator, Provider };
enum class MsgType { Query, Ack, Count, KeySet, BlindedResponse, Bundle, Abort };

std::string role_name(Role r);
Role role_from_name(const std::string& s);
std::string msg_type_name(MsgType t);
MsgType msg_type_from_name(const std::string& s);

struct Address {
    Role role = Role::Client;
    std::string id;  // identity token, session id, or alias
    bool operator==(const Address&) const = default;
};

struct Envelope {
    std::string session_id;
    Address from;
    Address to;
    MsgType type = MsgType::Query;
    uint64_t seq = 0;  // strictly increasing per (from, to) pair
    crypto::Bytes payload;

    bool operator==(const Envelope&) const = default;
    nlohmann::ordered_json to_json() const;
    static Envelope from_json(const nlohmann::json& j);
};

// Frame: uint32 big-endian payload length, then canonical JSON with key
// order session_id, from, to, msg_type, seq, payload.
crypto::Bytes encode(const Envelope& env);
Envelope decode(std::span<const unsigned char> frame);

struct TranscriptEntry {
    std::string direction;  // "send", "recv", or "drop"
    Envelope envelope;
    uint64_t time = 0;      // simulated
};

struct Transcript {
    std::vector<TranscriptEntry> entries;

    void append(std::string direction, Envelope env, uint64_t time);
    std::string to_jsonl() const;
    static Transcript from_jsonl(const std::string& text);
    void save(const std::string& path) const;
    static Transcript load(const std::string& path);
};

// Timer request a party hands back to the simulator.
struct TimerRequest {
    std::string name;
    uint64_t delay;  // simulated time units from now
};

struct PartyOutput {
    std::vector<Envelope> messages;
    std::vector<TimerRequest> timers;
    std::vector<Envelope> drops;  // ignored inputs, logged to the transcript
};

class Party {
public:
    virtual ~Party() = default;
    virtual Role role() const = 0;
    virtual std::string id() const = 0;
    virtual PartyOutput on_message(const Envelope& env, uint64_t now) = 0;
    virtual PartyOutput on_timer(const std::string& name, uint64_t now) = 0;
};

// Deterministic in-memory network: reliable, per-directed-pair FIFO
// delivery, constant per-pair latency derived from the seed.
class SimNet {
public:
    explicit SimNet(uint64_t seed, uint64_t step_cap = 100000);

    void add_party(Party* party);
    void post(Envelope env);                                // initial event
    void schedule(const std::string& party_id, TimerRequest timer);

    // Runs until all queues drain; throws StepCapExceeded on livelock.
    Transcript run();

private:
    struct Event {
        uint64_t at = 0;
        uint64_t order = 0;  // total tiebreak, preserves send order
        bool is_timer = false;
        Envelope env;          // delivery
        std::string party_id;  // timer
        std::string timer_name;
    };

    void dispatch(const Envelope& env, uint64_t now);
    uint64_t latency(const Address& from, const Address& to) const;

    uint64_t seed_;
    uint64_t step_cap_;
    uint64_t now_ = 0;
    uint64_t order_ = 0;
    std::vector<Party*> parties_;
    std::map<std::pair<std::string, std::string>, uint64_t> seq_;
    std::vector<Event> queue_;
    Transcript transcript_;
};

}  // namespace fedq

#endif
