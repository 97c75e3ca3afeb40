#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace slotnet {

using Vec = std::vector<double>;

/// Raised on structural misuse: dimension mismatches, bad layouts, invalid
/// actions, malformed files. These are programmer/configuration errors, not
/// recoverable runtime conditions.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a policy state no longer fits the observation it is asked to
/// process (e.g. the observation length changed mid-run); the caller must
/// rebuild the state for the new size.
struct StateMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

/// Dense row-major matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    std::size_t size() const { return a.size(); }
    bool empty() const { return a.empty(); }
};

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Forces a value through one IEEE rounding, defeating FMA contraction
/// across statements. Used where a bit pattern is part of the contract.
inline double rounded(double x) {
    volatile double v = x;
    return v;
}

/// Four-lane dot product. Breaks the FP dependency chain for speed; the
/// summation order is fixed, so results stay deterministic per build.
inline double dot4(const double* w, const double* v, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        a0 += w[j] * v[j];
        a1 += w[j + 1] * v[j + 1];
        a2 += w[j + 2] * v[j + 2];
        a3 += w[j + 3] * v[j + 3];
    }
    for (; j < n; ++j) a0 += w[j] * v[j];
    return (a0 + a1) + (a2 + a3);
}

/// Dot product of a matrix row against two concatenated segments [h, x]
/// without materializing the concatenation.
inline double dot_concat(const double* w, std::span<const double> h, std::span<const double> x) {
    return dot4(w, h.data(), h.size()) + dot4(w + h.size(), x.data(), x.size());
}

/// Correctly rounded sum of a sequence of finite doubles (Shewchuk partials,
/// the msum/fsum algorithm). The result is a function of the multiset of
/// inputs only: permuting the inputs cannot change a single bit, and summing
/// every element twice gives exactly twice the sum. The slot aggregation is
/// built on this, which is what makes the model's permutation and size
/// invariance hold bitwise instead of merely to rounding error.
class ExactSum {
public:
    void add(double x) {
        std::size_t used = 0;
        for (std::size_t k = 0; k < size_; ++k) {
            double y = partials_[k];
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            double hi = x + y;
            double lo = y - (hi - x);
            if (lo != 0.0) partials_[used++] = lo;
            x = hi;
        }
        // non-overlapping partials of finite doubles never exceed ~40 terms
        if (used >= kCapacity) throw ConfigError("ExactSum: partial overflow");
        partials_[used] = x;
        size_ = used + 1;
    }

    /// Correctly rounded total, with the half-even correction across partials.
    double total() const {
        double hi = 0.0;
        std::size_t n = size_;
        if (n > 0) {
            double lo = 0.0;
            hi = partials_[--n];
            while (n > 0) {
                double x = hi;
                double y = partials_[--n];
                hi = x + y;
                double yr = hi - x;
                lo = y - yr;
                if (lo != 0.0) break;
            }
            if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                          (lo > 0.0 && partials_[n - 1] > 0.0))) {
                double y = lo * 2.0;
                double x = hi + y;
                if (y == x - hi) hi = x;
            }
        }
        return hi;
    }

    void reset() { size_ = 0; }

private:
    static constexpr std::size_t kCapacity = 64;
    double partials_[kCapacity];
    std::size_t size_ = 0;
};

inline double exact_sum(std::span<const double> xs) {
    ExactSum acc;
    for (double x : xs) acc.add(x);
    return acc.total();
}

/// Index of the largest element; ties resolved to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
    require(!v.empty(), "argmax over empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Runs fn(i) for i in [0, n) on `workers` threads. Work items are claimed
/// from a shared counter; fn must write results only to its own index so the
/// outcome is independent of scheduling.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t spawn = std::min(workers, n);
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace slotnet
