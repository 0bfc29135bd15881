#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "kobound/config.hpp"
#include "kobound/csv.hpp"
#include "kobound/models.hpp"
#include "kobound/phantom.hpp"
#include "kobound/rng.hpp"
#include "kobound/tomo.hpp"

namespace kobound {

/// Worker count: explicit request > KOBOUND_WORKERS > hardware concurrency.
inline int effective_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KOBOUND_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Index-pulling worker pool. Results must be written to disjoint slots so
/// the output is independent of scheduling.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct SweepResult {
    std::vector<SweepRecord> records;
    SweepConfig config;
    double total_wall_seconds = 0.0;
};

namespace detail {

/// Pool layout per seed: [0, maxN) training candidates, then val_size
/// validation images, then test_size test images, all from one stream seeded
/// by derive_stream_seed(base_seed, seed_index). Training sets are nested:
/// the N-sample set is the prefix of length N.
inline std::vector<std::pair<Sinogram, Image>> build_pool_pairs(const SweepConfig& cfg,
                                                                const ForwardModel& fm,
                                                                int seed_index) {
    const Geometry& g = fm.geometry;
    const int count = static_cast<int>(cfg.n_grid.back()) + cfg.val_size + cfg.test_size;
    const std::uint64_t pool_seed = derive_stream_seed(cfg.base_seed, seed_index);
    const std::vector<Image> images = generate_pool(pool_seed, count, g.h);

    std::vector<std::pair<Sinogram, Image>> pairs;
    pairs.reserve(count);
    for (const Image& img : images) {
        const Eigen::VectorXd x = fm.a * flatten(img);
        pairs.emplace_back(sinogram_from_flat(x, g.v, g.b), img);
    }
    return pairs;
}

}  // namespace detail

/// Runs the full sweep: per scale build the forward model once; per seed
/// generate one phantom pool; per (arch, N) select the ridge coefficient on
/// the validation slice and evaluate on the test slice. Cells run in
/// parallel; records come back sorted by (h, arch, n, seed) regardless of
/// worker count. Fit failures are recorded in the row, not thrown.
inline SweepResult run_sweep(const SweepConfig& cfg) {
    validate(cfg);
    const auto t_start = std::chrono::steady_clock::now();
    const int n_count = static_cast<int>(cfg.n_grid.size());
    const int cells_per_seed = 2 * n_count;
    const int workers = effective_workers(cfg.parallelism);
    constexpr Arch kArchs[] = {Arch::ko, Arch::fc};

    SweepResult result;
    result.config = cfg;
    result.records.resize(static_cast<std::size_t>(cfg.h_list.size()) * cells_per_seed * cfg.seeds);

    for (std::size_t h_idx = 0; h_idx < cfg.h_list.size(); ++h_idx) {
        const Geometry geom = surrogate_geometry(cfg.h_list[h_idx]);
        auto fm = std::make_shared<const ForwardModel>(make_forward_model(geom, cfg.tikhonov_alpha));

        for (int seed = 0; seed < cfg.seeds; ++seed) {
            const auto pool = detail::build_pool_pairs(cfg, *fm, seed);
            const int max_n = static_cast<int>(cfg.n_grid.back());

            Dataset val{geom, {pool.begin() + max_n, pool.begin() + max_n + cfg.val_size}};
            Dataset test{geom, {pool.begin() + max_n + cfg.val_size, pool.end()}};

            parallel_for(cells_per_seed, workers, [&](int cell) {
                const Arch arch = kArchs[cell / n_count];
                const int n_idx = cell % n_count;
                const long long n = cfg.n_grid[n_idx];

                SweepRecord rec;
                rec.arch = arch;
                rec.h = geom.h;
                rec.v = geom.v;
                rec.b = geom.b;
                rec.n = n;
                rec.seed = seed;
                rec.metric = cfg.metric;

                const auto t0 = std::chrono::steady_clock::now();
                try {
                    Dataset train{geom, {pool.begin(), pool.begin() + n}};
                    SelectedFit sel = select_lambda(train, val, cfg.lambda_grid, arch, fm,
                                                    cfg.relu_at_eval);
                    rec.lambda = sel.lambda;
                    rec.train_err = std::visit(
                        [&](const auto& m) { return mean_metric(m, train, cfg.metric); }, sel.model);
                    rec.val_err =
                        cfg.metric == Metric::mse
                            ? sel.val_error
                            : std::visit([&](const auto& m) { return mean_metric(m, val, cfg.metric); },
                                         sel.model);
                    rec.test_err = std::visit(
                        [&](const auto& m) { return mean_metric(m, test, cfg.metric); }, sel.model);
                } catch (const std::exception& e) {
                    rec.lambda = std::numeric_limits<double>::quiet_NaN();
                    rec.train_err = rec.val_err = rec.test_err =
                        std::numeric_limits<double>::quiet_NaN();
                    rec.error_flag = e.what();
                }
                rec.fit_wall_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();

                // slot in (h, arch, n, seed) sort order
                const std::size_t slot =
                    ((h_idx * 2 + static_cast<std::size_t>(arch == Arch::fc)) * n_count + n_idx) *
                        cfg.seeds +
                    seed;
                result.records[slot] = std::move(rec);
            });
        }
    }
    result.total_wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace kobound
