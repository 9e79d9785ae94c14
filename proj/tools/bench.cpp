// Compares the serial reference kernels against the parallel/BLAS backend and
// times the training-relevant network passes.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>

#include "tonesr/nn/disc.hpp"
#include "tonesr/nn/kernels.hpp"
#include "tonesr/nn/rrdb.hpp"
#include "tonesr/nn/unet.hpp"
#include "tonesr/rng.hpp"
#include "tonesr/synth.hpp"

using namespace tonesr;
using namespace tonesr::nn;
namespace K = tonesr::nn::kernels;

namespace {

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best(F&& f, int reps) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        f();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

double max_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.v[i]) - b.v[i]));
    return m;
}

void bench_conv() {
    printf("-- conv2d 3x3 (serial reference vs im2col+BLAS) --\n");
    struct Case {
        int n, cin, h, w, cout;
    };
    for (const Case& cs : {Case{1, 32, 64, 64, 32}, Case{1, 64, 32, 32, 64},
                           Case{1, 16, 128, 128, 16}}) {
        K::ConvShape s{cs.n, cs.cin, cs.h, cs.w, cs.cout, 3, 3, 1, 1};
        Rng rng(1);
        Tensor x(cs.n, cs.cin, cs.h, cs.w), w(cs.cout, cs.cin * 9, 1, 1), b(cs.cout, 1, 1, 1);
        for (auto& v : x.v) v = rng.uniform_f(-1, 1);
        for (auto& v : w.v) v = rng.uniform_f(-1, 1);
        Tensor y1(cs.n, cs.cout, cs.h, cs.w), y2 = y1;

        K::set_backend(K::Backend::serial);
        const double ts = time_best([&] { K::conv2d_forward(s, x.data(), w.data(), b.data(), y1.data()); }, 2);
        K::set_backend(K::Backend::parallel);
        const double tp = time_best([&] { K::conv2d_forward(s, x.data(), w.data(), b.data(), y2.data()); }, 5);
        const double gflop = 2.0 * cs.n * cs.cout * cs.cin * 9 * cs.h * cs.w / 1e9;
        printf("  %dx%dx%dx%d -> %d: serial %7.2f ms | fast %7.2f ms (%5.1f GFLOP/s) | x%.1f | max|d|=%.2e\n",
               cs.n, cs.cin, cs.h, cs.w, cs.cout, ts * 1e3, tp * 1e3, gflop / tp, ts / tp,
               max_diff(y1, y2));
    }
}

void bench_render() {
    printf("-- render_tile 512x512 --\n");
    ScreentoneSpec spec;
    spec.kind = ToneKind::dot;
    spec.size_px = 3;
    spec.gap_px = 3;
    spec.angle_deg = 30;
    const double t = time_best([&] { synth::render_tile(spec, 512, 512); }, 3);
    printf("  dot(3,3,30): %.2f ms (%d threads)\n", t * 1e3, omp_get_max_threads());
}

void bench_nets() {
    printf("-- network passes (parallel backend) --\n");
    K::set_backend(K::Backend::parallel);
    {
        UNet net(UNetConfig{1, 9, 4, 32, 0.0f}, 1);
        Tensor x(4, 1, 64, 64), out;
        Rng rng(2);
        for (auto& v : x.v) v = rng.uniform_f(0, 1);
        net.forward(x, out);
        Tensor g = out;
        const double tf = time_best([&] { net.forward(x, out); }, 3);
        const double tb = time_best([&] { net.backward(g, nullptr, true); }, 3);
        printf("  seg U-Net d4w32, batch 4x64^2:   fwd %6.1f ms  bwd %6.1f ms\n", tf * 1e3,
               tb * 1e3);
    }
    {
        UNet net(UNetConfig{1, 2, 4, 16, 0.1f}, 1);
        Tensor x(1, 1, 256, 256), out;
        Rng rng(2);
        for (auto& v : x.v) v = rng.uniform_f(0, 1);
        net.forward(x, out);
        Tensor g = out;
        const double tf = time_best([&] { net.forward(x, out); }, 3);
        const double tb = time_best([&] { net.backward(g, nullptr, false); }, 3);
        printf("  struct U-Net d4w16, 1x256^2:     fwd %6.1f ms  bwd(data) %6.1f ms\n", tf * 1e3,
               tb * 1e3);
    }
    {
        RRDBNet net(RRDBConfig{4, 1, 1, 32, 16, 8}, 1);
        Tensor x(1, 1, 64, 64), out;
        Rng rng(2);
        for (auto& v : x.v) v = rng.uniform_f(0, 1);
        net.forward(x, out);
        Tensor g = out;
        const double tf = time_best([&] { net.forward(x, out); }, 2);
        const double tb = time_best([&] { net.backward(g, true); }, 2);
        printf("  RRDB nf32gc16x8 x4, 1x64^2:      fwd %6.1f ms  bwd %6.1f ms\n", tf * 1e3,
               tb * 1e3);
    }
    {
        PatchDiscriminator net(1, 32, 1);
        Tensor x(1, 1, 256, 256), out;
        Rng rng(2);
        for (auto& v : x.v) v = rng.uniform_f(0, 1);
        net.forward(x, out);
        Tensor g = out;
        const double tf = time_best([&] { net.forward(x, out); }, 3);
        const double tb = time_best([&] { net.backward(g, nullptr, true); }, 3);
        printf("  discriminator b32, 1x256^2:      fwd %6.1f ms  bwd %6.1f ms\n", tf * 1e3,
               tb * 1e3);
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "all";
    if (mode == "all" || mode == "conv") bench_conv();
    if (mode == "all" || mode == "render") bench_render();
    if (mode == "all" || mode == "nets") bench_nets();
    return 0;
}
