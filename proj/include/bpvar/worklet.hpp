#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/model.hpp"
#include "bpvar/rules.hpp"
#include "bpvar/traces.hpp"

namespace bpvar {

/// Data of one running case: variable assignments the rule trees and edge
/// guards are evaluated against.
using CaseData = std::map<std::string, std::string>;

/// One rule of a ripple-down rule tree. The root carries no condition (it
/// always fires and provides the default conclusion); every other node
/// refines the decision of the node it hangs under.
struct RdrNode {
    std::string name; // "root" for the root, otherwise a declared name
    std::optional<RuleExpr> condition;
    std::string conclusion;                        // worklet name
    std::map<std::string, std::string> cornerstone; // the case that justified this rule
    int true_child = -1;
    int false_child = -1;

    friend bool operator==(const RdrNode&, const RdrNode&) = default;
};

/// Ripple-down rule tree for one late-bound task. Stored as an arena with the
/// root at index 0.
struct RdrTree {
    std::string task; // label of the task this tree selects worklets for
    std::vector<RdrNode> nodes;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return static_cast<int>(i);
        return -1;
    }

    friend bool operator==(const RdrTree&, const RdrTree&) = default;
};

struct RdrSelection {
    std::string conclusion;
    std::vector<int> path;  // node indices evaluated, in order (starts at 0)
    int deciding = 0;       // node whose conclusion was adopted
    bool last_fired = true; // whether the last evaluated node's condition held
};

/// Standard ripple-down descent: a node whose condition holds contributes its
/// conclusion and passes control to its true-child; otherwise control moves
/// to the false-child. The last contributed conclusion wins.
inline RdrSelection select_worklet(const RdrTree& tree, const CaseData& data) {
    if (tree.nodes.empty()) throw UnknownWorklet("rule tree for task '" + tree.task + "' is empty");
    RdrSelection sel;
    int cur = 0;
    while (true) {
        sel.path.push_back(cur);
        const RdrNode& n = tree.nodes[cur];
        const bool fired = !n.condition || eval_rule(*n.condition, data).value;
        sel.last_fired = fired;
        if (fired) sel.deciding = cur;
        const int next = fired ? n.true_child : n.false_child;
        if (next < 0) break;
        cur = next;
    }
    sel.conclusion = tree.nodes[sel.deciding].conclusion;
    return sel;
}

/// Adds an exception rule for a case the tree currently gets wrong. The new
/// node is attached exactly where the failed descent ended, and the case is
/// stored as the rule's cornerstone. Throws:
///   UnknownWorklet      - conclusion names no worklet in the repertoire
///   ConditionRejectsCase- the new condition does not hold on the new case
///   RedundantRule       - the tree already selects this conclusion
inline int add_rule(RdrTree& tree, const CaseData& data, const std::string& condition_text,
                    const std::string& conclusion, const std::set<std::string>& repertoire_names,
                    const std::string& name = "") {
    if (conclusion != "EMPTY" && !repertoire_names.count(conclusion))
        throw UnknownWorklet("conclusion '" + conclusion + "' names no worklet in the repertoire");

    RuleExpr condition = parse_rule(condition_text, "rule for task '" + tree.task + "'");
    if (!eval_rule(condition, data).value)
        throw ConditionRejectsCase("condition '" + condition_text +
                                   "' does not hold on the case it was added for");

    const RdrSelection sel = select_worklet(tree, data);
    if (sel.conclusion == conclusion)
        throw RedundantRule("tree for task '" + tree.task + "' already selects '" + conclusion +
                            "' for this case");

    RdrNode node;
    node.name = name.empty() ? "n" + std::to_string(tree.nodes.size()) : name;
    node.condition = std::move(condition);
    node.conclusion = conclusion;
    node.cornerstone = data;
    tree.nodes.push_back(std::move(node));
    const int idx = static_cast<int>(tree.nodes.size()) - 1;

    RdrNode& attach = tree.nodes[sel.path.back()];
    (sel.last_fired ? attach.true_child : attach.false_child) = idx;
    return idx;
}

/// Replays every stored cornerstone case against the current tree. A healthy
/// tree still returns each rule's own conclusion for the case that created
/// it; regressions are reported as human-readable mismatch strings.
inline std::vector<std::string> replay_cornerstones(const RdrTree& tree) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const RdrNode& n = tree.nodes[i];
        const RdrSelection sel = select_worklet(tree, n.cornerstone);
        if (sel.conclusion != n.conclusion)
            problems.push_back("rule '" + n.name + "' expects '" + n.conclusion +
                               "' for its cornerstone case, but the tree now selects '" +
                               sel.conclusion + "'");
    }
    return problems;
}

/// Named process fragments a late-bound task can expand to. "EMPTY" is
/// reserved: it always resolves to the zero-task model (start -> end).
struct Repertoire {
    std::map<std::string, ProcessModel> worklets;

    bool contains(const std::string& name) const {
        return name == "EMPTY" || worklets.count(name) > 0;
    }

    const ProcessModel& get(const std::string& name) const {
        if (name == "EMPTY") {
            static const ProcessModel empty = [] {
                ProcessModel m;
                m.id = "EMPTY";
                m.nodes.push_back({"s", NodeKind::start, std::nullopt, "", "", {}});
                m.nodes.push_back({"e", NodeKind::end, std::nullopt, "", "", {}});
                m.edges.push_back({"s", "e", ""});
                return m;
            }();
            return empty;
        }
        auto it = worklets.find(name);
        if (it == worklets.end()) throw UnknownWorklet("no worklet named '" + name + "' in the repertoire");
        return it->second;
    }

    std::set<std::string> names() const {
        std::set<std::string> out{"EMPTY"};
        for (const auto& [k, v] : worklets) {
            (void)v;
            out.insert(k);
        }
        return out;
    }

    friend bool operator==(const Repertoire&, const Repertoire&) = default;
};

/// A parent process with late-bound tasks: each such task is resolved per
/// case by its rule tree, and the chosen worklet runs as an atomic subcase.
struct WorkletModel {
    std::string name;
    ProcessModel parent;
    std::set<std::string> worklet_tasks;  // labels flagged for late binding
    std::map<std::string, RdrTree> trees; // task label -> rule tree
    Repertoire repertoire;

    friend bool operator==(const WorkletModel&, const WorkletModel&) = default;
};

struct CaseEvent {
    std::string kind;    // task-started / task-completed / worklet-selected /
                         // subcase-started / subcase-completed
    std::string task;    // task label (empty for subcase bookkeeping)
    std::string worklet; // selected worklet, where applicable
    std::vector<std::string> rdr_path; // rule names visited by the selection

    friend bool operator==(const CaseEvent&, const CaseEvent&) = default;
};

struct CaseLog {
    std::vector<CaseEvent> events;
    Trace trace;

    std::string to_string() const {
        std::string out;
        for (const auto& e : events) {
            out += e.kind;
            if (!e.task.empty()) out += " " + e.task;
            if (!e.worklet.empty()) out += " -> " + e.worklet;
            if (!e.rdr_path.empty()) {
                out += " (rules:";
                for (const auto& p : e.rdr_path) out += " " + p;
                out += ")";
            }
            out += "\n";
        }
        out += "trace: " + bpvar::to_string(trace) + "\n";
        return out;
    }
};

namespace detail {

/// Machinery shared by the seeded and the exhaustive case executors: edge
/// indexing, guard evaluation against the case data, or-join quiescence.
class CaseEngineBase {
  public:
    CaseEngineBase(const ProcessModel& m, const CaseData& data) : m_(m), data_(data) {
        for (std::size_t i = 0; i < m_.edges.size(); ++i) {
            out_edges_[m_.edges[i].from].push_back(i);
            in_edges_[m_.edges[i].to].push_back(i);
        }
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

  protected:
    using Marking = std::map<std::size_t, std::size_t>;

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
        if (it != m.end() && --it->second == 0) m.erase(it);
    }
    static void put(Marking& m, std::size_t ei) { ++m[ei]; }

    bool guard_true(std::size_t ei) const {
        const std::string& g = m_.edges[ei].guard;
        if (g.empty()) return false;
        return eval_rule(parse_rule(g, "guard on edge " + m_.edges[ei].from + " -> " + m_.edges[ei].to),
                         data_)
            .value;
    }

    /// Out-edges a choice may route to: edges whose guards hold, or all of
    /// them when no guard holds (including when all are unguarded).
    std::vector<std::size_t> viable_outs(const std::string& id) const {
        const auto& outs = out_at(id);
        std::vector<std::size_t> live;
        for (std::size_t ei : outs)
            if (guard_true(ei)) live.push_back(ei);
        return live.empty() ? outs : live;
    }

    bool or_join_quiescent(const Marking& marking, const std::string& join) const {
        for (std::size_t ei : in_at(join)) {
            if (marking.count(ei)) continue;
            const std::string& src = m_.edges[ei].from;
            for (const auto& [ti, cnt] : marking) {
                (void)cnt;
                const std::string& at = m_.edges[ti].to;
                if (at == src || (reach_.count(at) && reach_.at(at).count(src))) return false;
            }
        }
        return true;
    }

    std::vector<std::size_t> marked_ins(const Marking& marking, const std::string& id) const {
        std::vector<std::size_t> v;
        for (std::size_t ei : in_at(id))
            if (marking.count(ei)) v.push_back(ei);
        return v;
    }

    /// Whether the node has any legal firing under the marking.
    bool enabled(const Node& n, const Marking& marking) const {
        const auto mi = marked_ins(marking, n.id);
        if (mi.empty()) return false;
        if (n.kind != NodeKind::gateway) return true;
        const auto& ins = in_at(n.id);
        const GatewayKind gk = n.gateway.value_or(GatewayKind::and_);
        if (ins.size() > 1 && gk == GatewayKind::and_) {
            for (std::size_t ei : ins)
                if (!marking.count(ei)) return false;
            return true;
        }
        if (ins.size() > 1 && gk == GatewayKind::or_) return or_join_quiescent(marking, n.id);
        return true;
    }

    const ProcessModel& m_;
    const CaseData& data_;
    std::map<std::string, std::vector<std::size_t>> out_edges_, in_edges_;
    std::map<std::string, std::set<std::string>> reach_;
};

} // namespace detail

/// Runs one case to completion, resolving every late-bound task through its
/// rule tree and executing the selected worklet as an atomic subcase. All
/// nondeterminism (interleaving, unguarded choices) is drawn from a seeded
/// generator, so equal seeds give equal logs.
class CaseExecutor {
  public:
    CaseExecutor(const WorkletModel& wm, CaseData data, std::uint32_t seed)
        : wm_(wm), data_(std::move(data)), rng_(seed) {}

    CaseLog run() {
        CaseLog log;
        run_model(wm_.parent, log, 0);
        return log;
    }

  private:
    void run_model(const ProcessModel& model, CaseLog& log, int depth) {
        if (depth > 16) throw CyclicModel("worklet recursion exceeds depth 16");
        Runner(*this, model, log, depth).run();
    }

    class Runner : detail::CaseEngineBase {
      public:
        Runner(CaseExecutor& outer, const ProcessModel& model, CaseLog& log, int depth)
            : detail::CaseEngineBase(model, outer.data_), outer_(outer), log_(log), depth_(depth) {}

        void run() {
            const Node* start = nullptr;
            for (const auto& n : m_.nodes)
                if (n.kind == NodeKind::start) { start = &n; break; }
            if (!start) return;
            Marking marking;
            for (std::size_t ei : out_at(start->id)) put(marking, ei);

            while (!marking.empty()) {
                std::vector<const Node*> candidates;
                std::set<std::string> seen;
                for (const auto& [ei, cnt] : marking) {
                    (void)cnt;
                    const Node* n = m_.find_node(m_.edges[ei].to);
                    if (n && seen.insert(n->id).second && enabled(*n, marking)) candidates.push_back(n);
                }
                if (candidates.empty())
                    throw InvalidResult("case execution deadlocked in model '" + m_.id + "'");
                std::sort(candidates.begin(), candidates.end(),
                          [](const Node* a, const Node* b) { return a->id < b->id; });
                fire(*candidates[outer_.pick(candidates.size())], marking);
            }
        }

      private:
        void fire(const Node& n, Marking& marking) {
            const auto mi = marked_ins(marking, n.id);
            const auto& ins = in_at(n.id);
            const auto& outs = out_at(n.id);

            if (n.kind != NodeKind::gateway) {
                take(marking, mi[outer_.pick(mi.size())]);
                if (n.kind == NodeKind::task) outer_.run_task(n, log_, depth_);
                for (std::size_t oi : outs) put(marking, oi);
                return;
            }

            const GatewayKind gk = n.gateway.value_or(GatewayKind::and_);
            const bool is_join = ins.size() > 1;
            if (gk == GatewayKind::and_ && is_join) {
                for (std::size_t ei : ins) take(marking, ei);
                for (std::size_t oi : outs) put(marking, oi);
                return;
            }
            if (gk == GatewayKind::or_ && is_join) {
                for (std::size_t ei : mi) take(marking, ei);
                for (std::size_t oi : outs) put(marking, oi);
                return;
            }
            // Splits (and pass-throughs): one token in, routed per kind.
            take(marking, mi[outer_.pick(mi.size())]);
            if (gk == GatewayKind::and_) {
                for (std::size_t oi : outs) put(marking, oi);
                return;
            }
            if (gk == GatewayKind::xor_) {
                const auto live = viable_outs(n.id);
                if (!live.empty()) put(marking, live[outer_.pick(live.size())]);
                return;
            }
            // or-split: the guard-selected subset, or a random non-empty one.
            std::vector<std::size_t> chosen;
            for (std::size_t ei : outs)
                if (guard_true(ei)) chosen.push_back(ei);
            if (chosen.empty() && !outs.empty()) {
                const std::size_t subsets = (std::size_t{1} << outs.size()) - 1;
                const std::size_t mask = 1 + outer_.pick(subsets);
                for (std::size_t b = 0; b < outs.size(); ++b)
                    if (mask & (std::size_t{1} << b)) chosen.push_back(outs[b]);
            }
            for (std::size_t oi : chosen) put(marking, oi);
        }

        CaseExecutor& outer_;
        CaseLog& log_;
        int depth_;
    };

    void run_task(const Node& task, CaseLog& log, int depth) {
        log.events.push_back({"task-started", task.label, "", {}});
        if (wm_.worklet_tasks.count(task.label)) {
            auto it = wm_.trees.find(task.label);
            if (it == wm_.trees.end())
                throw MissingTree("task '" + task.label + "' is late-bound but has no rule tree");
            const RdrSelection sel = select_worklet(it->second, data_);
            CaseEvent ev{"worklet-selected", task.label, sel.conclusion, {}};
            for (int idx : sel.path) ev.rdr_path.push_back(it->second.nodes[idx].name);
            log.events.push_back(std::move(ev));
            log.events.push_back({"subcase-started", task.label, sel.conclusion, {}});
            run_model(wm_.repertoire.get(sel.conclusion), log, depth + 1);
            log.events.push_back({"subcase-completed", task.label, sel.conclusion, {}});
        } else {
            log.trace.push_back(task.label);
        }
        log.events.push_back({"task-completed", task.label, "", {}});
    }

    std::size_t pick(std::size_t n) { return n <= 1 ? 0 : rng_() % n; }

    const WorkletModel& wm_;
    CaseData data_;
    std::mt19937 rng_;
};

inline CaseLog execute_case(const WorkletModel& wm, const CaseData& data, std::uint32_t seed) {
    return CaseExecutor(wm, data, seed).run();
}

namespace detail {

/// Explores every run of a worklet model for fixed case data: all
/// interleavings, every guard-respecting choice, and every trace of each
/// selected worklet body (bodies stay atomic — their tasks never interleave
/// with the parent).
class ExhaustiveCaseRunner : CaseEngineBase {
  public:
    ExhaustiveCaseRunner(const WorkletModel& wm, const ProcessModel& model, const CaseData& data,
                         TraceOptions opt, std::set<std::string>& in_progress)
        : CaseEngineBase(model, data), wm_(wm), opt_(opt), in_progress_(in_progress) {}

    TraceSet run() {
        const Node* start = nullptr;
        for (const auto& n : m_.nodes)
            if (n.kind == NodeKind::start) { start = &n; break; }
        if (!start) return result_;
        Marking marking;
        for (std::size_t ei : out_at(start->id)) put(marking, ei);
        Trace trace;
        explore(marking, trace);
        return result_;
    }

  private:
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

        std::set<std::string> candidates;
        for (const auto& [ei, cnt] : marking) {
            (void)cnt;
            candidates.insert(m_.edges[ei].to);
        }
        bool fired_any = false;
        for (const auto& id : candidates) {
            const Node* n = m_.find_node(id);
            if (!n || !enabled(*n, marking)) continue;
            fired_any = true;
            fire(*n, marking, trace);
        }
        if (!fired_any) ++result_.stuck_runs;
    }

    void fire(const Node& n, const Marking& marking, Trace& trace) {
        const auto mi = marked_ins(marking, n.id);
        const auto& ins = in_at(n.id);
        const auto& outs = out_at(n.id);

        if (n.kind != NodeKind::gateway) {
            for (std::size_t ei : mi) {
                Marking next = marking;
                take(next, ei);
                for (std::size_t oi : outs) put(next, oi);
                if (n.kind == NodeKind::task)
                    emit_task(n, next, trace);
                else
                    explore(next, trace);
            }
            return;
        }

        const GatewayKind gk = n.gateway.value_or(GatewayKind::and_);
        const bool is_join = ins.size() > 1;
        if ((gk == GatewayKind::and_ && is_join) || (gk == GatewayKind::or_ && is_join)) {
            Marking next = marking;
            if (gk == GatewayKind::and_)
                for (std::size_t ei : ins) take(next, ei);
            else
                for (std::size_t ei : mi) take(next, ei);
            for (std::size_t oi : outs) put(next, oi);
            explore(next, trace);
            return;
        }
        if (gk == GatewayKind::and_) {
            Marking next = marking;
            take(next, mi.front());
            for (std::size_t oi : outs) put(next, oi);
            explore(next, trace);
            return;
        }
        if (gk == GatewayKind::xor_) {
            for (std::size_t ei : mi) {
                for (std::size_t oi : viable_outs(n.id)) {
                    Marking next = marking;
                    take(next, ei);
                    put(next, oi);
                    explore(next, trace);
                }
            }
            return;
        }
        // or-split
        std::vector<std::size_t> live;
        for (std::size_t ei : outs)
            if (guard_true(ei)) live.push_back(ei);
        if (!live.empty()) {
            Marking next = marking;
            take(next, mi.front());
            for (std::size_t oi : live) put(next, oi);
            explore(next, trace);
            return;
        }
        const std::size_t subsets = std::size_t{1} << outs.size();
        for (std::size_t mask = 1; mask < subsets; ++mask) {
            Marking next = marking;
            take(next, mi.front());
            for (std::size_t b = 0; b < outs.size(); ++b)
                if (mask & (std::size_t{1} << b)) put(next, outs[b]);
            explore(next, trace);
        }
    }

    void emit_task(const Node& task, const Marking& next, Trace& trace) {
        if (!wm_.worklet_tasks.count(task.label)) {
            trace.push_back(task.label);
            explore(next, trace);
            trace.pop_back();
            return;
        }
        auto it = wm_.trees.find(task.label);
        if (it == wm_.trees.end())
            throw MissingTree("task '" + task.label + "' is late-bound but has no rule tree");
        const RdrSelection sel = select_worklet(it->second, data_);
        for (const Trace& body : body_language(sel.conclusion)) {
            for (const auto& label : body) trace.push_back(label);
            explore(next, trace);
            trace.resize(trace.size() - body.size());
        }
    }

    const std::set<Trace>& body_language(const std::string& worklet) {
        auto it = body_cache_.find(worklet);
        if (it != body_cache_.end()) return it->second;
        if (!in_progress_.insert(worklet).second)
            throw CyclicModel("worklet '" + worklet + "' recursively contains itself");
        ExhaustiveCaseRunner sub(wm_, wm_.repertoire.get(worklet), data_, opt_, in_progress_);
        TraceSet ts = sub.run();
        in_progress_.erase(worklet);
        if (ts.truncated) result_.truncated = true;
        if (ts.traces.empty()) ts.traces.insert(Trace{}); // a stuck body still lets the parent observe it
        return body_cache_[worklet] = std::move(ts.traces);
    }

    const WorkletModel& wm_;
    TraceOptions opt_;
    std::set<std::string>& in_progress_;
    std::set<std::pair<Marking, Trace>> seen_;
    std::map<std::string, std::set<Trace>> body_cache_;
    TraceSet result_;
};

} // namespace detail

/// The complete trace language of a worklet model for fixed case data. Edge
/// guards narrow choices (a choice with no satisfied guard stays fully open),
/// rule trees bind every late task deterministically, and each worklet body
/// contributes its own trace language atomically.
inline TraceSet execute_exhaustive(const WorkletModel& wm, const CaseData& data, TraceOptions opt = {}) {
    if (has_cycle(wm.parent))
        throw CyclicModel("model '" + wm.parent.id + "' contains a cycle");
    std::set<std::string> in_progress;
    return detail::ExhaustiveCaseRunner(wm, wm.parent, data, opt, in_progress).run();
}

} // namespace bpvar
