#include "svseg/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svseg/error.hpp"

namespace svseg {

FlowNetwork::FlowNetwork(std::size_t nodes, std::size_t source, std::size_t sink)
    : source_(source), sink_(sink), head_(nodes) {
    if (source >= nodes || sink >= nodes || source == sink)
        throw InvalidArgument("FlowNetwork: invalid source/sink");
}

std::size_t FlowNetwork::add_arc(std::size_t u, std::size_t v, double capacity) {
    if (u >= node_count() || v >= node_count())
        throw InvalidArgument("FlowNetwork: arc endpoint out of range");
    if (!std::isfinite(capacity) || capacity < 0.0)
        throw InvalidArgument("FlowNetwork: capacity must be finite and non-negative");
    const std::size_t id = to_.size();
    to_.push_back(v);
    capacity_.push_back(capacity);
    residual_.push_back(capacity);
    head_[u].push_back(id);
    to_.push_back(u);
    capacity_.push_back(0.0);
    residual_.push_back(0.0);
    head_[v].push_back(id + 1);
    return id / 2;
}

double FlowNetwork::max_flow() {
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    double total = 0.0;
    std::vector<std::size_t> via(node_count());
    std::vector<std::size_t> queue;
    queue.reserve(node_count());
    while (true) {
        std::fill(via.begin(), via.end(), none);
        queue.clear();
        queue.push_back(source_);
        via[source_] = none - 1;
        for (std::size_t qi = 0; qi < queue.size() && via[sink_] == none; ++qi) {
            const std::size_t u = queue[qi];
            for (std::size_t a : head_[u]) {
                const std::size_t v = to_[a];
                if (via[v] == none && residual_[a] > kSaturation) {
                    via[v] = a;
                    queue.push_back(v);
                }
            }
        }
        if (via[sink_] == none)
            break;
        double bottleneck = std::numeric_limits<double>::infinity();
        for (std::size_t v = sink_; v != source_; v = to_[via[v] ^ 1])
            bottleneck = std::min(bottleneck, residual_[via[v]]);
        for (std::size_t v = sink_; v != source_; v = to_[via[v] ^ 1]) {
            residual_[via[v]] -= bottleneck;
            residual_[via[v] ^ 1] += bottleneck;
        }
        total += bottleneck;
        ++augmentations_;
    }
    return total;
}

std::vector<bool> FlowNetwork::source_side() const {
    std::vector<bool> seen(node_count(), false);
    std::vector<std::size_t> stack{source_};
    seen[source_] = true;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t a : head_[u])
            if (!seen[to_[a]] && residual_[a] > kSaturation) {
                seen[to_[a]] = true;
                stack.push_back(to_[a]);
            }
    }
    return seen;
}

double FlowNetwork::cut_capacity(const std::vector<bool>& side) const {
    double cut = 0.0;
    for (std::size_t a = 0; a < to_.size(); a += 2)
        if (side[to_[a + 1]] && !side[to_[a]])
            cut += capacity_[a];
    return cut;
}

} // namespace svseg
