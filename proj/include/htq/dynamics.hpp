#pragma once

#include <algorithm>
#include <optional>

#include "htq/errors.hpp"
#include "htq/vecutil.hpp"

namespace htq {

using QueueState = IVec;

// One slot of the queue recursion, kept as exact integers. The complementarity
// q_next[i] * u[i] == 0 is an identity of the update and is re-checked on every
// simulated slot with zero tolerance.
struct SlotRecord {
    QueueState q;
    IVec a;
    IVec s;
    IVec u;
    QueueState q_next;
    int channel_state = -1;  // label index, -1 when the system has no channel
};

// q_next[i] = max{q[i] + a[i] - s[i], 0}; u is the service that found no job.
// Order of events within the slot: queues observed, control solved, arrivals,
// then service, so a job may be served in its arrival slot.
inline SlotRecord step(const QueueState& q, const IVec& a, const IVec& s) {
    const std::size_t n = q.size();
    if (a.size() != n || s.size() != n)
        throw config_error("step: dimension mismatch, q/a/s sizes " + std::to_string(n) + "/" +
                           std::to_string(a.size()) + "/" + std::to_string(s.size()));
    SlotRecord rec;
    rec.q = q;
    rec.a = a;
    rec.s = s;
    rec.u.resize(n);
    rec.q_next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (q[i] < 0 || a[i] < 0 || s[i] < 0)
            throw config_error("step: negative component at queue " + std::to_string(i));
        const long long raw = q[i] + a[i] - s[i];
        rec.q_next[i] = std::max(raw, 0ll);
        rec.u[i] = rec.q_next[i] - raw;
    }
    return rec;
}

// Full per-slot invariant check. Returns nothing; throws naming the slot.
inline void check_slot(const SlotRecord& rec, long long a_max, long long s_max, long long slot) {
    const std::size_t n = rec.q.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (rec.q_next[i] != rec.q[i] + rec.a[i] - rec.s[i] + rec.u[i])
            throw invariant_violation(slot, "q_next != q + a - s + u at queue " + std::to_string(i));
        if (rec.u[i] < 0 || rec.u[i] > rec.s[i])
            throw invariant_violation(slot, "unused service outside [0, s] at queue " + std::to_string(i));
        if (rec.q_next[i] * rec.u[i] != 0)
            throw invariant_violation(slot, "q_next * u != 0 at queue " + std::to_string(i));
        if (rec.q_next[i] < 0)
            throw invariant_violation(slot, "negative queue at " + std::to_string(i));
        if (a_max >= 0 && rec.a[i] > a_max)
            throw invariant_violation(slot, "arrival exceeds declared bound at queue " + std::to_string(i));
        if (s_max >= 0 && rec.s[i] > s_max)
            throw invariant_violation(slot, "service exceeds declared bound at queue " + std::to_string(i));
    }
}

}  // namespace htq
