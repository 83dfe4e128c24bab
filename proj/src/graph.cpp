#include "ppmc/graph.hpp"

#include <algorithm>

namespace ppmc {

namespace {

struct TarjanState {
    const std::vector<std::vector<int>>& adj;
    std::vector<int> index, lowlink, on_stack;
    std::vector<int> stack;
    int next_index = 0;
    SccDecomposition out;

    explicit TarjanState(const std::vector<std::vector<int>>& a)
        : adj(a), index(a.size(), -1), lowlink(a.size(), 0), on_stack(a.size(), 0) {
        out.component.assign(a.size(), -1);
    }

    // iterative Tarjan to survive deep dependency chains
    void run(int root) {
        struct Frame {
            int v;
            size_t edge;
        };
        std::vector<Frame> frames{{root, 0}};
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < adj[f.v].size()) {
                int w = adj[f.v][f.edge++];
                if (index[w] < 0) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    lowlink[f.v] = std::min(lowlink[f.v], index[w]);
                }
            } else {
                if (lowlink[f.v] == index[f.v]) {
                    std::vector<int> comp;
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        out.component[w] = out.count;
                        comp.push_back(w);
                        if (w == f.v) break;
                    }
                    out.members.push_back(std::move(comp));
                    ++out.count;
                }
                int v = f.v;
                frames.pop_back();
                if (!frames.empty())
                    lowlink[frames.back().v] = std::min(lowlink[frames.back().v], lowlink[v]);
            }
        }
    }
};

} // namespace

SccDecomposition tarjan_scc(const std::vector<std::vector<int>>& adj) {
    TarjanState st(adj);
    for (int v = 0; v < static_cast<int>(adj.size()); ++v) {
        if (st.index[v] < 0) st.run(v);
    }
    return std::move(st.out);
}

} // namespace ppmc
