#include "fedq/transport.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fedq/errors.hpp"

namespace fedq {

std::string role_name(Role r) {
    switch (r) {
        case Role::Client: return "client";
        case Role::Mediator: return "mediator";
        case Role::Provider: return "provider";
    }
    return "?";
}

Role role_from_name(const std::string& s) {
    if (s == "client") return Role::Client;
    if (s == "mediator") return Role::Mediator;
    if (s == "provider") return Role::Provider;
    throw SchemaError("unknown role '" + s + "'");
}

std::string msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::Query: return "query";
        case MsgType::Ack: return "ack";
        case MsgType::Count: return "count";
        case MsgType::KeySet: return "keyset";
        case MsgType::BlindedResponse: return "blinded_response";
        case MsgType::Bundle: return "bundle";
        case MsgType::Abort: return "abort";
    }
    return "?";
}

MsgType msg_type_from_name(const std::string& s) {
    if (s == "query") return MsgType::Query;
    if (s == "ack") return MsgType::Ack;
    if (s == "count") return MsgType::Count;
    if (s == "keyset") return MsgType::KeySet;
    if (s == "blinded_response") return MsgType::BlindedResponse;
    if (s == "bundle") return MsgType::Bundle;
    if (s == "abort") return MsgType::Abort;
    throw UnknownMessage("'" + s + "'");
}

namespace {
nlohmann::ordered_json address_to_json(const Address& a) {
    nlohmann::ordered_json j;
    j["role"] = role_name(a.role);
    j["id"] = a.id;
    return j;
}

Address address_from_json(const nlohmann::json& j) {
    if (!j.contains("role") || !j.contains("id")) throw SchemaError("address missing field");
    return Address{role_from_name(j.at("role").get<std::string>()),
                   j.at("id").get<std::string>()};
}
}  // namespace

nlohmann::ordered_json Envelope::to_json() const {
    nlohmann::ordered_json j;
    j["session_id"] = session_id;
    j["from"] = address_to_json(from);
    j["to"] = address_to_json(to);
    j["msg_type"] = msg_type_name(type);
    j["seq"] = seq;
    j["payload"] = crypto::to_base64(payload);
    return j;
}

Envelope Envelope::from_json(const nlohmann::json& j) {
    for (const char* field : {"session_id", "from", "to", "msg_type", "seq", "payload"}) {
        if (!j.contains(field)) throw SchemaError(std::string("missing field '") + field + "'");
    }
    Envelope env;
    env.session_id = j.at("session_id").get<std::string>();
    env.from = address_from_json(j.at("from"));
    env.to = address_from_json(j.at("to"));
    env.type = msg_type_from_name(j.at("msg_type").get<std::string>());
    env.seq = j.at("seq").get<uint64_t>();
    env.payload = crypto::from_base64(j.at("payload").get<std::string>());
    return env;
}

crypto::Bytes encode(const Envelope& env) {
    std::string body = env.to_json().dump();
    crypto::Bytes out;
    out.reserve(4 + body.size());
    auto len = static_cast<uint32_t>(body.size());
    out.push_back(static_cast<unsigned char>(len >> 24));
    out.push_back(static_cast<unsigned char>(len >> 16));
    out.push_back(static_cast<unsigned char>(len >> 8));
    out.push_back(static_cast<unsigned char>(len));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Envelope decode(std::span<const unsigned char> frame) {
    if (frame.size() < 4) throw FrameError("frame shorter than length prefix");
    uint32_t len = (uint32_t(frame[0]) << 24) | (uint32_t(frame[1]) << 16) |
                   (uint32_t(frame[2]) << 8) | uint32_t(frame[3]);
    if (frame.size() != 4 + size_t(len)) {
        throw FrameError("frame length " + std::to_string(frame.size() - 4) +
                         " disagrees with prefix " + std::to_string(len));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(frame.begin() + 4, frame.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FrameError(e.what());
    }
    try {
        return Envelope::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(e.what());
    }
}

void Transcript::append(std::string direction, Envelope env, uint64_t time) {
    entries.push_back({std::move(direction), std::move(env), time});
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["dir"] = e.direction;
        j["time"] = e.time;
        j["envelope"] = e.envelope.to_json();
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

Transcript Transcript::from_jsonl(const std::string& text) {
    Transcript t;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            t.entries.push_back({j.at("dir").get<std::string>(),
                                 Envelope::from_json(j.at("envelope")),
                                 j.at("time").get<uint64_t>()});
        } catch (const std::exception& e) {
            throw TranscriptParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return t;
}

void Transcript::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TranscriptParseError("cannot write '" + path + "'");
    out << to_jsonl();
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TranscriptParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_jsonl(buf.str());
}

SimNet::SimNet(uint64_t seed, uint64_t step_cap) : seed_(seed), step_cap_(step_cap) {}

void SimNet::add_party(Party* party) { parties_.push_back(party); }

uint64_t SimNet::latency(const Address& from, const Address& to) const {
    // Constant per directed pair so FIFO holds; value depends on the seed to
    // vary interleavings across runs with different seeds.
    uint64_t h = seed_;
    for (char c : role_name(from.role)) h = h * 1099511628211ULL + uint64_t(c);
    for (char c : from.id) h = h * 1099511628211ULL + uint64_t(c);
    for (char c : role_name(to.role)) h = h * 1099511628211ULL + uint64_t(c);
    for (char c : to.id) h = h * 1099511628211ULL + uint64_t(c);
    splitmix64(h);
    return 1 + h % 5;
}

void SimNet::post(Envelope env) { dispatch(env, now_); }

void SimNet::schedule(const std::string& party_id, TimerRequest timer) {
    queue_.push_back(Event{now_ + timer.delay, order_++, true, {}, party_id, timer.name});
}

void SimNet::dispatch(const Envelope& env, uint64_t now) {
    Envelope stamped = env;
    stamped.seq = ++seq_[{role_name(env.from.role) + ":" + env.from.id,
                          role_name(env.to.role) + ":" + env.to.id}];
    transcript_.append("send", stamped, now);
    queue_.push_back(Event{now + latency(env.from, env.to), order_++, false,
                           std::move(stamped), {}, {}});
}

Transcript SimNet::run() {
    uint64_t steps = 0;
    while (!queue_.empty()) {
        if (++steps > step_cap_) {
            throw StepCapExceeded("exceeded " + std::to_string(step_cap_) + " events");
        }
        auto next = std::min_element(queue_.begin(), queue_.end(),
                                     [](const Event& a, const Event& b) {
                                         return std::tie(a.at, a.order) < std::tie(b.at, b.order);
                                     });
        Event ev = std::move(*next);
        queue_.erase(next);
        now_ = ev.at;

        PartyOutput out;
        std::string target_id;
        if (ev.is_timer) {
            target_id = ev.party_id;
            for (Party* p : parties_) {
                if (p->id() == ev.party_id) {
                    out = p->on_timer(ev.timer_name, now_);
                    break;
                }
            }
        } else {
            transcript_.append("recv", ev.env, now_);
            bool delivered = false;
            for (Party* p : parties_) {
                if (p->role() == ev.env.to.role &&
                    (p->id() == ev.env.to.id || ev.env.to.id.empty())) {
                    out = p->on_message(ev.env, now_);
                    target_id = p->id();
                    delivered = true;
                    break;
                }
            }
            if (!delivered) {
                transcript_.append("drop", ev.env, now_);
                continue;
            }
        }
        for (auto& msg : out.messages) dispatch(msg, now_);
        for (auto& dropped : out.drops) transcript_.append("drop", dropped, now_);
        for (auto& timer : out.timers) {
            queue_.push_back(Event{now_ + timer.delay, order_++, true, {},
                                   target_id, timer.name});
        }
    }
    return std::move(transcript_);
}

}  // namespace fedq
