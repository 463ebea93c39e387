#include "ugvnet/link.hpp"

#include <cmath>

namespace ugvnet {

HistoryBuffer::HistoryBuffer(int capacity) {
    if (capacity < 1) {
        throw std::invalid_argument("HistoryBuffer: capacity must be >= 1");
    }
    ring_.resize(static_cast<std::size_t>(capacity));
}

void HistoryBuffer::store(ControlSequence seq) {
    const std::size_t idx = static_cast<std::size_t>(seq.anchor_slot) % ring_.size();
    ring_[idx] = std::move(seq);
}

const ControlSequence* HistoryBuffer::lookup(int anchor) const {
    if (anchor < 0) return nullptr;
    const auto& slot = ring_[static_cast<std::size_t>(anchor) % ring_.size()];
    if (slot.has_value() && slot->anchor_slot == anchor) return &*slot;
    return nullptr;
}

const ControlSequence* HistoryBuffer::latest_at_or_before(int slot) const {
    const int lowest = slot - capacity() + 1;
    for (int anchor = slot; anchor >= lowest && anchor >= 0; --anchor) {
        if (const ControlSequence* seq = lookup(anchor)) return seq;
    }
    return nullptr;
}

std::optional<ControlInput> control_for_slot(const HistoryBuffer& buf, int slot) {
    const ControlSequence* seq = buf.latest_at_or_before(slot);
    if (seq == nullptr) return std::nullopt;
    const std::size_t offset = static_cast<std::size_t>(slot - seq->anchor_slot);
    if (offset >= seq->controls.size()) return std::nullopt;
    return seq->controls[offset];
}

std::optional<Measurement> compensate_measurement(const Measurement& z_delayed, int tau,
                                                  const HistoryBuffer& buffer,
                                                  const State& belief_at_send, int k,
                                                  double dt) {
    if (tau < 0) throw std::invalid_argument("compensate_measurement: tau must be >= 0");
    if (tau == 0) return z_delayed;

    State s{z_delayed.r * std::cos(z_delayed.alpha),
            z_delayed.r * std::sin(z_delayed.alpha),
            belief_at_send.theta};
    for (int slot = k - tau; slot < k; ++slot) {
        const auto u = control_for_slot(buffer, slot);
        if (!u.has_value()) return std::nullopt;
        s = step(s, *u, dt);
    }
    return measure(s);
}

ActuatorOutput Actuator::step(const std::vector<Packet<ControlSequence>>& arrivals, int k) {
    const auto res = rx_.step(arrivals, k);
    if (res.selected.has_value()) {
        buffer_.store(res.selected->payload);
    }

    ActuatorOutput out;
    out.tau_ca = res.tau;
    out.accepted = res.selected.has_value();
    if (!rx_.held().has_value() ||
        static_cast<std::size_t>(res.tau) >= rx_.held()->payload.controls.size()) {
        out.u = ControlInput{0.0, 0.0};  // buffer exhausted beyond the horizon
        out.starved = true;
        return out;
    }
    out.u = rx_.held()->payload.controls[static_cast<std::size_t>(res.tau)];
    return out;
}

}  // namespace ugvnet
