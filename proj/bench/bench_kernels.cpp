// Serial vs OpenMP conv2d kernels on shapes used by the desk-scale models.
#include <benchmark/benchmark.h>

#include <vector>

#include "lsda/kernels.hpp"
#include "lsda/rng.hpp"

using namespace lsda;
using namespace lsda::kernels;

namespace {

struct Workload {
  Conv2dDims d;
  std::vector<float> x, w, b, y, gy, gx, gw, gb;
};

Workload make_workload(int cin, int hw, int cout, int k) {
  Workload wl;
  auto& d = wl.d;
  d.cin = cin;
  d.h = d.w = hw;
  d.cout = cout;
  d.k = k;
  d.stride = 1;
  d.pad = k / 2;
  d.hout = d.h;
  d.wout = d.w;
  Rng rng(1);
  auto fill = [&](std::vector<float>& v, size_t n) {
    v.resize(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  };
  fill(wl.x, static_cast<size_t>(cin) * hw * hw);
  fill(wl.w, static_cast<size_t>(cout) * cin * k * k);
  fill(wl.b, cout);
  fill(wl.gy, static_cast<size_t>(cout) * hw * hw);
  wl.y.resize(wl.gy.size());
  wl.gx.resize(wl.x.size());
  wl.gw.resize(wl.w.size());
  wl.gb.resize(wl.b.size());
  return wl;
}

Workload& workload(const benchmark::State& st) {
  static Workload small = make_workload(8, 64, 8, 3);
  static Workload mid = make_workload(16, 32, 16, 3);
  static Workload deep = make_workload(32, 8, 32, 3);
  switch (st.range(0)) {
    case 0: return small;
    case 1: return mid;
    default: return deep;
  }
}

}  // namespace

static void BM_forward_serial(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    conv2d_forward_serial(wl.x.data(), wl.w.data(), wl.b.data(), wl.y.data(),
                          wl.d);
    benchmark::DoNotOptimize(wl.y.data());
  }
}
BENCHMARK(BM_forward_serial)->Arg(0)->Arg(1)->Arg(2);

static void BM_forward_parallel(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    conv2d_forward(wl.x.data(), wl.w.data(), wl.b.data(), wl.y.data(), wl.d);
    benchmark::DoNotOptimize(wl.y.data());
  }
}
BENCHMARK(BM_forward_parallel)->Arg(0)->Arg(1)->Arg(2);

static void BM_backward_input_serial(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    std::fill(wl.gx.begin(), wl.gx.end(), 0.f);
    conv2d_backward_input_serial(wl.gy.data(), wl.w.data(), wl.gx.data(),
                                 wl.d);
    benchmark::DoNotOptimize(wl.gx.data());
  }
}
BENCHMARK(BM_backward_input_serial)->Arg(0)->Arg(1)->Arg(2);

static void BM_backward_input_parallel(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    std::fill(wl.gx.begin(), wl.gx.end(), 0.f);
    conv2d_backward_input(wl.gy.data(), wl.w.data(), wl.gx.data(), wl.d);
    benchmark::DoNotOptimize(wl.gx.data());
  }
}
BENCHMARK(BM_backward_input_parallel)->Arg(0)->Arg(1)->Arg(2);

static void BM_backward_weight_serial(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    std::fill(wl.gw.begin(), wl.gw.end(), 0.f);
    std::fill(wl.gb.begin(), wl.gb.end(), 0.f);
    conv2d_backward_weight_serial(wl.gy.data(), wl.x.data(), wl.gw.data(),
                                  wl.gb.data(), wl.d);
    benchmark::DoNotOptimize(wl.gw.data());
  }
}
BENCHMARK(BM_backward_weight_serial)->Arg(0)->Arg(1)->Arg(2);

static void BM_backward_weight_parallel(benchmark::State& st) {
  auto& wl = workload(st);
  for (auto _ : st) {
    std::fill(wl.gw.begin(), wl.gw.end(), 0.f);
    std::fill(wl.gb.begin(), wl.gb.end(), 0.f);
    conv2d_backward_weight(wl.gy.data(), wl.x.data(), wl.gw.data(),
                           wl.gb.data(), wl.d);
    benchmark::DoNotOptimize(wl.gw.data());
  }
}
BENCHMARK(BM_backward_weight_parallel)->Arg(0)->Arg(1)->Arg(2);

BENCHMARK_MAIN();
