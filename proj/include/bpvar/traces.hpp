#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/model.hpp"

namespace bpvar {

/// A trace is the ordered sequence of task labels observed in one complete
/// run of a model. Events and gateways route control but leave no record.
using Trace = std::vector<std::string>;

inline std::string to_string(const Trace& t) {
    std::string out = "[";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ", ";
        out += t[i];
    }
    return out + "]";
}

struct TraceOptions {
    std::size_t max_traces = 10000;
    std::size_t max_len = 200;
};

struct TraceSet {
    std::set<Trace> traces;
    bool truncated = false;     // a cap was hit; the set may be incomplete
    std::size_t stuck_runs = 0; // distinct markings with tokens but no enabled step

    bool contains(const Trace& t) const { return traces.count(t) > 0; }

    std::string to_string() const {
        std::string out;
        for (const auto& t : traces) out += bpvar::to_string(t) + "\n";
        if (stuck_runs) out += "(stuck markings: " + std::to_string(stuck_runs) + ")\n";
        if (truncated) out += "(truncated)\n";
        return out;
    }
};

namespace detail {

/// Token-game interpreter over edges of an acyclic model. Explores every
/// interleaving and every gateway choice:
///   - and-split marks all out-edges, and-join waits for all in-edges
///   - xor-split marks one chosen out-edge, xor-join forwards each token alone
///   - or-split marks a chosen non-empty subset of out-edges
///   - or-join fires once no unmarked in-edge can still receive a token
///     (checked by reachability from the targets of all pending tokens)
class TraceEnumerator {
  public:
    TraceEnumerator(const ProcessModel& m, TraceOptions opt) : m_(m), opt_(opt) {
        for (std::size_t i = 0; i < m_.edges.size(); ++i) {
            out_edges_[m_.edges[i].from].push_back(i);
            in_edges_[m_.edges[i].to].push_back(i);
        }
        // Transitive reachability between nodes, for the or-join quiescence test.
        std::map<std::string, std::vector<std::string>> succ;
        for (const auto& e : m_.edges) succ[e.from].push_back(e.to);
        for (const auto& n : m_.nodes) {
            std::set<std::string>& r = reach_[n.id];
            std::vector<std::string> frontier{n.id};
            while (!frontier.empty()) {
                std::string cur = frontier.back();
                frontier.pop_back();
                for (const auto& nxt : succ[cur])
                    if (r.insert(nxt).second) frontier.push_back(nxt);
            }
        }
    }

    TraceSet run() {
        const Node* start = nullptr;
        for (const auto& n : m_.nodes)
            if (n.kind == NodeKind::start) { start = &n; break; }
        if (!start) return result_;
        Marking init;
        for (std::size_t ei : out_at(start->id)) init[ei] = 1;
        Trace trace;
        explore(init, trace);
        return result_;
    }

  private:
    using Marking = std::map<std::size_t, std::size_t>; // edge index -> token count

    const std::vector<std::size_t>& out_at(const std::string& id) const {
        static const std::vector<std::size_t> none;
        auto it = out_edges_.find(id);
        return it == out_edges_.end() ? none : it->second;
    }
    const std::vector<std::size_t>& in_at(const std::string& id) const {
        static const std::vector<std::size_t> none;
        auto it = in_edges_.find(id);
        return it == in_edges_.end() ? none : it->second;
    }

    static void take(Marking& m, std::size_t ei) {
        auto it = m.find(ei);
        if (it == m.end()) return;
        if (--it->second == 0) m.erase(it);
    }
    static void put(Marking& m, std::size_t ei) { ++m[ei]; }

    bool node_can_reach_edge_source(const std::string& node, const std::string& src) const {
        if (node == src) return true;
        auto it = reach_.find(node);
        return it != reach_.end() && it->second.count(src) > 0;
    }

    /// An unmarked in-edge of an or-join is still pending while any token's
    /// next node can reach the edge's source.
    bool edge_pending(const Marking& marking, std::size_t ei) const {
        const std::string& src = m_.edges[ei].from;
        for (const auto& [ti, cnt] : marking) {
            (void)cnt;
            if (node_can_reach_edge_source(m_.edges[ti].to, src)) return true;
        }
        return false;
    }

    void explore(const Marking& marking, Trace& trace) {
        if (result_.truncated) return;
        if (marking.empty()) {
            if (result_.traces.size() >= opt_.max_traces) {
                result_.truncated = true;
                return;
            }
            result_.traces.insert(trace);
            return;
        }
        if (trace.size() > opt_.max_len) {
            result_.truncated = true;
            return;
        }
        if (!seen_.insert({marking, trace}).second) return;

        // Nodes with at least one marked incoming edge are firing candidates.
        std::set<std::string> candidates;
        for (const auto& [ei, cnt] : marking) {
            (void)cnt;
            candidates.insert(m_.edges[ei].to);
        }

        bool fired_any = false;
        for (const auto& id : candidates) {
            const Node* n = m_.find_node(id);
            if (!n) continue;
            if (fire(*n, marking, trace)) fired_any = true;
        }
        if (!fired_any) ++result_.stuck_runs;
    }

    /// Attempts every way node `n` can fire under `marking`; recurses into the
    /// successor states. Returns whether at least one firing was enabled.
    bool fire(const Node& n, const Marking& marking, Trace& trace) {
        const auto& ins = in_at(n.id);
        const auto& outs = out_at(n.id);

        auto marked_ins = [&] {
            std::vector<std::size_t> v;
            for (std::size_t ei : ins)
                if (marking.count(ei)) v.push_back(ei);
            return v;
        };

        if (n.kind != NodeKind::gateway) {
            // Tasks, events and ends have a single in-edge; consume and move on.
            auto mi = marked_ins();
            if (mi.empty()) return false;
            for (std::size_t ei : mi) {
                Marking next = marking;
                take(next, ei);
                for (std::size_t oi : outs) put(next, oi);
                const bool record = n.kind == NodeKind::task;
                if (record) trace.push_back(n.label);
                explore(next, trace);
                if (record) trace.pop_back();
            }
            return true;
        }

        const GatewayKind gk = n.gateway.value_or(GatewayKind::and_);
        const bool is_join = ins.size() > 1;

        if (gk == GatewayKind::and_) {
            if (is_join) {
                for (std::size_t ei : ins)
                    if (!marking.count(ei)) return false;
                Marking next = marking;
                for (std::size_t ei : ins) take(next, ei);
                for (std::size_t oi : outs) put(next, oi);
                explore(next, trace);
                return true;
            }
            auto mi = marked_ins();
            if (mi.empty()) return false;
            Marking next = marking;
            take(next, mi.front());
            for (std::size_t oi : outs) put(next, oi);
            explore(next, trace);
            return true;
        }

        if (gk == GatewayKind::xor_) {
            auto mi = marked_ins();
            if (mi.empty()) return false;
            // Join behaviour: each marked in-edge forwards independently.
            // Split behaviour: one token in, one chosen out-edge.
            for (std::size_t ei : mi) {
                for (std::size_t oi : outs) {
                    Marking next = marking;
                    take(next, ei);
                    put(next, oi);
                    explore(next, trace);
                }
                if (outs.empty()) {
                    Marking next = marking;
                    take(next, ei);
                    explore(next, trace);
                }
            }
            return true;
        }

        // or gateway
        if (is_join) {
            auto mi = marked_ins();
            if (mi.empty()) return false;
            for (std::size_t ei : ins)
                if (!marking.count(ei) && edge_pending(marking, ei)) return false;
            Marking next = marking;
            for (std::size_t ei : mi) take(next, ei);
            for (std::size_t oi : outs) put(next, oi);
            explore(next, trace);
            return true;
        }
        auto mi = marked_ins();
        if (mi.empty()) return false;
        // Split: every non-empty subset of out-edges is a possible choice.
        const std::size_t subsets = std::size_t{1} << outs.size();
        for (std::size_t mask = 1; mask < subsets; ++mask) {
            Marking next = marking;
            take(next, mi.front());
            for (std::size_t b = 0; b < outs.size(); ++b)
                if (mask & (std::size_t{1} << b)) put(next, outs[b]);
            explore(next, trace);
        }
        return true;
    }

    const ProcessModel& m_;
    TraceOptions opt_;
    std::map<std::string, std::vector<std::size_t>> out_edges_, in_edges_;
    std::map<std::string, std::set<std::string>> reach_;
    std::set<std::pair<Marking, Trace>> seen_;
    TraceSet result_;
};

} // namespace detail

/// Enumerates the complete trace language of an acyclic model by playing the
/// token game over its edges. Throws CyclicModel on cyclic input; guards are
/// ignored (every branch is possible).
inline TraceSet enumerate_traces(const ProcessModel& m, TraceOptions opt = {}) {
    if (has_cycle(m))
        throw CyclicModel("model '" + m.id + "' contains a cycle; trace enumeration requires acyclic models");
    return detail::TraceEnumerator(m, opt).run();
}

/// True when both models generate exactly the same trace language.
inline bool trace_equivalent(const ProcessModel& a, const ProcessModel& b, TraceOptions opt = {}) {
    const TraceSet ta = enumerate_traces(a, opt);
    const TraceSet tb = enumerate_traces(b, opt);
    return !ta.truncated && !tb.truncated && ta.traces == tb.traces;
}

} // namespace bpvar
