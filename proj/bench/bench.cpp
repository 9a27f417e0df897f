#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cropcast/data.hpp"
#include "cropcast/kernels.hpp"
#include "cropcast/ml/model.hpp"
#include "cropcast/pipeline.hpp"
#include "cropcast/rng.hpp"
#include "cropcast/timeseries.hpp"

using namespace cropcast;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial reference vs OpenMP kernels", "cropcast_bench"};
  int repeats = 3;
  int points = 2000000;
  int gram_rows = 2000;
  int forest_rows = 4000;
  int svc_rows = 1200;
  bool quick = false;
  app.add_option("--repeats", repeats)->capture_default_str();
  app.add_option("--points", points, "Haversine targets")->capture_default_str();
  app.add_option("--gram-rows", gram_rows)->capture_default_str();
  app.add_option("--forest-rows", forest_rows)->capture_default_str();
  app.add_option("--svc-rows", svc_rows)->capture_default_str();
  app.add_flag("--quick", quick, "Small sizes and no order selection");
  CLI11_PARSE(app, argc, argv);
  if (quick) {
    repeats = 1;
    points = 100000;
    gram_rows = 300;
    forest_rows = 500;
    svc_rows = 300;
  }

  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-22s %10s %10s %9s  %s\n", "kernel", "serial s", "omp s", "speedup", "results");

  Rng rng(2024);
  {
    std::vector<geo::GeoPoint> targets;
    for (int i = 0; i < points; ++i) targets.emplace_back(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const geo::GeoPoint origin(25.74058, 89.261139);
    std::vector<double> a(targets.size()), b(targets.size());
    const double s = best_of(repeats, [&] { kernels::haversine_batch(origin, targets, a, geo::kEarthRadiusKm, Execution::serial); });
    const double p = best_of(repeats, [&] { kernels::haversine_batch(origin, targets, b, geo::kEarthRadiusKm, Execution::parallel); });
    report("haversine_batch", s, p, a == b);
  }
  {
    Eigen::MatrixXd x(gram_rows, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::MatrixXd a, b;
    const double s = best_of(repeats, [&] { a = kernels::rbf_gram(x, 0.1, Execution::serial); });
    const double p = best_of(repeats, [&] { b = kernels::rbf_gram(x, 0.1, Execution::parallel); });
    report("rbf_gram", s, p, a == b);
  }

  data::GeneratorConfig g;
  g.seed = 11;
  g.years = quick ? 12 : 50;
  g.stations = 1;
  g.yield_rows = forest_rows;
  g.disease_rows = svc_rows;
  const auto d = data::generate_synthetic(g);
  {
    const auto table = pipeline::yield_table(d.yields);
    auto h = ml::Hyperparams::defaults(ml::ModelKind::RFR);
    ml::TrainedModel a, b;
    const double s = best_of(repeats, [&] { a = ml::train_regressor(ml::ModelKind::RFR, table, 5, h, Execution::serial); });
    const double p = best_of(repeats, [&] { b = ml::train_regressor(ml::ModelKind::RFR, table, 5, h, Execution::parallel); });
    report("random_forest", s, p, a.to_json() == b.to_json());
  }
  {
    const auto table = pipeline::disease_table(d.diseases);
    auto h = ml::Hyperparams::defaults(ml::ModelKind::SVC);
    h.cost = 100.0;
    h.gamma = 1.0;
    ml::TrainedModel a, b;
    const double s = best_of(repeats, [&] { a = ml::train_classifier(ml::ModelKind::SVC, table, 5, h, Execution::serial); });
    const double p = best_of(repeats, [&] { b = ml::train_classifier(ml::ModelKind::SVC, table, 5, h, Execution::parallel); });
    report("svc_train", s, p, a.to_json() == b.to_json());
  }
  if (!quick) {
    const auto series = d.temperature.series(d.temperature.stations().front());
    std::vector<ts::SarimaxOrder> grid;
    for (int p = 0; p <= 2; ++p)
      for (int P = 0; P <= 1; ++P)
        for (int Q = 0; Q <= 1; ++Q) grid.push_back({p, 0, 0, P, 1, Q, 12});
    ts::SelectionResult a, b;
    const double s = best_of(1, [&] { a = ts::select_order_detailed(series, grid, Execution::serial); });
    const double p = best_of(1, [&] { b = ts::select_order_detailed(series, grid, Execution::parallel); });
    bool same = a.best == b.best && a.scores.size() == b.scores.size();
    for (std::size_t i = 0; same && i < a.scores.size(); ++i) same = a.scores[i].aic == b.scores[i].aic;
    report("select_order", s, p, same);
  }
  return 0;
}
