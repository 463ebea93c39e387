#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ugvnet/vehicle.hpp"

namespace ugvnet {

// Solved state/control window anchored at the slot it was computed for.
// controls[i] is the input intended for slot anchor_slot + i.
struct ControlSequence {
    int anchor_slot = 0;
    std::vector<State> states;          // horizon + 1 entries
    std::vector<ControlInput> controls; // horizon + 1 entries
};

template <typename Payload>
struct Packet {
    Payload payload;
    int sent_at = 0;         // generation slot (timestamp)
    std::uint64_t seq = 0;   // monotone id, tiebreak for equal delays
};

// Age-of-information receiver: keeps the packet whose information time
// (generation slot) is the newest seen so far, otherwise ages the held one.
//
//   tau_k = min delay among arrivals   if that is strictly fresher
//   tau_k = 1 + tau_{k-1}              otherwise
//
// Ties in information time keep the held packet.
template <typename Payload>
class SmartReceiver {
public:
    struct Result {
        std::optional<Packet<Payload>> selected;  // newly accepted packet, if any
        int tau = 0;                              // delay of the held information
    };

    Result step(const std::vector<Packet<Payload>>& arrivals, int k) {
        const Packet<Payload>* best = nullptr;
        for (const auto& p : arrivals) {
            if (p.sent_at > k) {
                throw std::invalid_argument("SmartReceiver: arrival from the future");
            }
            if (best == nullptr || p.sent_at > best->sent_at ||
                (p.sent_at == best->sent_at && p.seq < best->seq)) {
                best = &p;
            }
        }
        if (best != nullptr) {
            const int fresh_tau = k - best->sent_at;
            if (fresh_tau < held_delay_ + 1) {
                held_ = *best;
                held_delay_ = fresh_tau;
                return Result{*best, fresh_tau};
            }
        }
        held_delay_ += 1;
        return Result{std::nullopt, held_delay_};
    }

    const std::optional<Packet<Payload>>& held() const { return held_; }
    int held_delay() const { return held_delay_; }

private:
    int held_delay_ = 0;
    std::optional<Packet<Payload>> held_;
};

// Ring of solved sequences keyed by anchor slot. Capacity must cover the
// largest lookback ever needed (both links' max delays plus the horizon).
class HistoryBuffer {
public:
    explicit HistoryBuffer(int capacity);

    void store(ControlSequence seq);

    // Sequence solved exactly at `anchor`, if still within capacity.
    const ControlSequence* lookup(int anchor) const;

    // Most recent stored sequence with anchor <= slot.
    const ControlSequence* latest_at_or_before(int slot) const;

    int capacity() const { return static_cast<int>(ring_.size()); }

private:
    std::vector<std::optional<ControlSequence>> ring_;
};

// Control the buffered sequences designate for a given slot: the most recent
// anchor <= slot, offset slot - anchor. Empty when nothing covers the slot.
std::optional<ControlInput> control_for_slot(const HistoryBuffer& buf, int slot);

// Roll a delayed range-bearing measurement forward tau slots through the
// nominal dynamics, using the buffered controls, and re-measure. The bearing
// pair cannot recover heading, so the anchor heading comes from the state
// estimate recorded when the measurement was generated.
// Returns nullopt when the buffer does not cover [k - tau, k).
std::optional<Measurement> compensate_measurement(const Measurement& z_delayed, int tau,
                                                  const HistoryBuffer& buffer,
                                                  const State& belief_at_send, int k,
                                                  double dt);

struct ActuatorOutput {
    ControlInput u;       // zero when starved
    int tau_ca = 0;
    bool accepted = false;  // a fresher sequence arrived this slot
    bool starved = false;   // no sequence covers this slot
};

// Controller-to-actuator endpoint: smart receiver + sequence buffer. Applies
// the entry of the freshest sequence indexed for the current slot; beyond the
// sequence's horizon it commands zero input and flags starvation.
class Actuator {
public:
    explicit Actuator(int buffer_capacity) : buffer_(buffer_capacity) {}

    ActuatorOutput step(const std::vector<Packet<ControlSequence>>& arrivals, int k);

    const HistoryBuffer& buffer() const { return buffer_; }

private:
    SmartReceiver<ControlSequence> rx_;
    HistoryBuffer buffer_;
};

}  // namespace ugvnet
