// Times the serial and OpenMP gradient paths on a batch of random images and
// checks that both return identical gradients.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <numeric>

#include <omp.h>

#include "plabel/network.hpp"
#include "plabel/random.hpp"

using namespace plabel;

int main(int argc, char** argv) {
    CLI::App app{"Gradient kernel benchmark"};
    std::size_t batch = 64, iters = 5, size = 32;
    app.add_option("--batch", batch, "samples per gradient")->capture_default_str();
    app.add_option("--iters", iters, "timed repetitions")->capture_default_str();
    app.add_option("--size", size, "image side length")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    const auto spec = NetworkSpec::reduced_cnn(size, size);
    const Parameters params = init_parameters(spec, Seed{1});
    Rng rng(Seed{2});
    std::vector<std::vector<double>> pixels(batch, std::vector<double>(size * size));
    TrainingSet data;
    for (auto& img : pixels) {
        for (double& p : img) p = rng.uniform();
        data.inputs.emplace_back(img);
        const double q = rng.uniform();
        data.targets.emplace_back(std::vector<double>{1.0 - q, q});
    }
    std::vector<std::size_t> idx(batch);
    std::iota(idx.begin(), idx.end(), 0);

    auto time = [&](ExecPolicy policy, LossGradient& out) {
        GradientEngine engine(spec, policy);
        out = engine.compute(params, data, idx, {});
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < iters; ++i) out = engine.compute(params, data, idx, {});
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / iters;
    };
    LossGradient gs, gp;
    const double ts = time(ExecPolicy::serial, gs);
    const double tp = time(ExecPolicy::parallel, gp);
    std::printf("threads   %d\n", omp_get_max_threads());
    std::printf("serial    %.4f s/batch\n", ts);
    std::printf("parallel  %.4f s/batch\n", tp);
    std::printf("speedup   %.2fx\n", ts / tp);
    const bool same = gs.loss == gp.loss && gs.gradient == gp.gradient;
    std::printf("identical %s\n", same ? "yes" : "no");
    return same ? 0 : 1;
}
