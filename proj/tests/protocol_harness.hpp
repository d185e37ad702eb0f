#pragma once

// One global and n local controllers exchanging messages over lossy links
// with random delays. Every request a local receives is delivered twice so
// that duplicate handling is checked on each hop.

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <tuple>
#include <vector>

#include "geochain/orchestration.hpp"
#include "geochain/provisioning.hpp"

namespace harness {

using namespace geochain;

struct Stats {
    int max_skew = 0;
    std::size_t duplicate_checks = 0;
    std::size_t hash_mismatches = 0;
    std::size_t lost = 0;
    std::size_t rounds = 0;
    std::size_t stuck_rounds = 0;
};

class Protocol {
public:
    Protocol(int n, double loss, std::uint64_t seed)
        : n_(n), loss_(loss), rng_(seed), catalog_(default_catalog()),
          global_(GlobalConfig{n, {}, {10, 1.0, 1.0}, kRetransmitMs}, hook(), table(0), DelayMatrix(static_cast<std::size_t>(n)))
    {
        for (int d = 0; d < n; ++d) {
            Inventory inv(d, n, catalog_, 0);
            for (VnfIndex v = 0; v < static_cast<VnfIndex>(catalog_.size()); ++v) {
                inv.seed_initial(v, 1);
            }
            locals_.emplace_back(LocalConfig{d, 10}, std::move(inv), table(0));
        }
    }

    // Runs one round to completion or until `limit_ms` elapses.
    bool round(std::int64_t limit_ms = 600000)
    {
        const std::int64_t start = now_;
        push(global_.start_round(now_));
        while (!events_.empty()) {
            auto [t, seq, kind, msg, timer] = events_.top();
            events_.pop();
            now_ = t;
            if (now_ - start > limit_ms) {
                ++stats_.stuck_rounds;
                return false;
            }
            if (kind == 0) {
                deliver_local(msg);
            } else if (kind == 1) {
                auto out = global_.on_message(msg, now_);
                const bool done = out.round_completed;
                push(out);
                check_skew();
                if (done) {
                    ++stats_.rounds;
                    drain();
                    return true;
                }
            } else {
                push(global_.on_timer(timer, now_));
            }
        }
        ++stats_.stuck_rounds;
        return false;
    }

    const Stats& stats() const { return stats_; }
    GlobalController& global() { return global_; }
    std::vector<LocalController>& locals() { return locals_; }
    std::int64_t now() const { return now_; }

private:
    using Event = std::tuple<std::int64_t, std::uint64_t, int, ControllerMsg, std::uint64_t>;
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            return std::tie(std::get<0>(a), std::get<1>(a)) > std::tie(std::get<0>(b), std::get<1>(b));
        }
    };

    static PathTable table(long long interval)
    {
        // Two alternating tables so that rotations are observable.
        const bool odd = interval % 2 != 0;
        return PathTable{{{0, 1}, odd ? ServiceChainPath{0, 1, 1, 1, 1} : ServiceChainPath{0, 0, 0, 0, 1}}};
    }

    PlanningHook hook()
    {
        return [this](const PlanningInput& in) {
            PlanningOutput out;
            for (int d = 0; d < n_; ++d) {
                Decision dec;
                for (std::size_t v = 0; v < catalog_.size(); ++v) {
                    dec.targets.push_back(1 + static_cast<int>((in.interval + d + static_cast<long long>(v)) % 3));
                }
                out.per_dc.push_back(dec);
            }
            out.paths = table(in.interval + 1);
            return out;
        };
    }

    std::int64_t delay() { return 10 + static_cast<std::int64_t>(rng_() % 400); }
    bool lost()
    {
        const bool l = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < loss_;
        stats_.lost += l ? 1 : 0;
        return l;
    }

    void push(const Outbox& out)
    {
        for (const auto& m : out.messages) {
            if (!lost()) {
                events_.emplace(now_ + delay(), seq_++, 0, m, 0);
            }
        }
        for (const auto& t : out.timers) {
            events_.emplace(t.at_ms, seq_++, 2, ControllerMsg{}, t.msg_id);
        }
    }

    void deliver_local(const ControllerMsg& m)
    {
        auto& local = locals_.at(static_cast<std::size_t>(m.receiver));
        const auto r = local.on_message(m, now_);
        const auto h = local.state_hash();
        const auto again = local.on_message(m, now_);
        ++stats_.duplicate_checks;
        if (local.state_hash() != h || again.msg_id != r.msg_id) {
            ++stats_.hash_mismatches;
        }
        check_skew();
        if (!lost()) {
            events_.emplace(now_ + delay(), seq_++, 1, r, 0);
        }
    }

    void check_skew()
    {
        long long lo = global_.interval();
        long long hi = lo;
        for (const auto& l : locals_) {
            lo = std::min(lo, l.interval());
            hi = std::max(hi, l.interval());
        }
        stats_.max_skew = std::max(stats_.max_skew, static_cast<int>(hi - lo));
    }

    // Late responses and timers of a finished round.
    void drain()
    {
        while (!events_.empty()) {
            auto [t, seq, kind, msg, timer] = events_.top();
            events_.pop();
            now_ = std::max(now_, t);
            if (kind == 0) {
                deliver_local(msg);
            } else if (kind == 1) {
                push(global_.on_message(msg, now_));
            } else {
                push(global_.on_timer(timer, now_));
            }
        }
    }

    int n_;
    double loss_;
    std::mt19937_64 rng_;
    Catalog catalog_;
    GlobalController global_;
    std::vector<LocalController> locals_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::int64_t now_ = 0;
    std::uint64_t seq_ = 0;
    Stats stats_;
};

} // namespace harness
