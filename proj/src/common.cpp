#include "kgp/common.hpp"

#include <algorithm>

namespace kgp {

double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double chunked_sum(std::size_t n, int threads,
                   const std::function<double(std::size_t)>& f) {
    if (n == 0) return 0.0;
    constexpr std::size_t kChunks = 64;
    const std::size_t nchunks = std::min(kChunks, n);
    std::vector<double> partial(nchunks, 0.0);
    auto chunk_range = [&](std::size_t c, std::size_t& lo, std::size_t& hi) {
        lo = c * n / nchunks;
        hi = (c + 1) * n / nchunks;
    };
    auto run_chunk = [&](std::size_t c) {
        std::size_t lo, hi;
        chunk_range(c, lo, hi);
        std::vector<double> buf;
        buf.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) buf.push_back(f(i));
        partial[c] = pairwise_sum(buf);
    };
    if (threads <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        const int nt = std::min<std::size_t>(threads, nchunks);
        for (int t = 0; t < nt; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < nchunks; c += nt) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    return pairwise_sum(partial);
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    if (threads <= 1) {
        body(0, n);
        return;
    }
    const int nt = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) {
        const std::size_t lo = t * n / nt;
        const std::size_t hi = (t + 1) * n / nt;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace kgp
