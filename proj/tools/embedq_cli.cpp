// embedq: precompute, inspect, serve and benchmark embedding-quality bundles.

#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "embedq/bundle.hpp"
#include "embedq/error.hpp"
#include "embedq/parallel.hpp"
#include "embedq/pipeline.hpp"
#include "embedq/service.hpp"
#include "embedq/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void print_status(const embedq::StatusReport& rep) {
  std::cout << "dataset " << rep.dataset << " (n=" << rep.n << ")\n";
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& c : rep.columns) {
    std::cout << "  " << std::left << std::setw(8) << embedq::to_string(c.state)
              << std::setw(16) << c.column.embedding.value_or("(bundle)")
              << std::setw(28) << embedq::to_string(c.column.metric)
              << c.column.params.dump();
    if (c.state != embedq::CacheState::present && !c.detail.empty()) {
      std::cout << "  [" << c.detail << "]";
    }
    std::cout << "\n";
  }
  std::cout << rep.count(embedq::CacheState::present) << " present, "
            << rep.count(embedq::CacheState::missing) << " missing, "
            << rep.count(embedq::CacheState::corrupt) << " corrupt\n";
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-point quality measures for 2-D embeddings"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = all cores)");

  // gen-demo
  auto* gen = app.add_subcommand("gen-demo", "Write a synthetic dataset bundle");
  std::string gen_out;
  std::size_t gen_n = 5000, gen_d = 20, gen_clusters = 8;
  std::uint64_t gen_seed = 42;
  std::string fixture;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n", gen_n, "Number of points");
  gen->add_option("--d", gen_d, "Dimensions");
  gen->add_option("--clusters", gen_clusters, "Gaussian clusters");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--fixture", fixture, "Named fixture instead of random data")
      ->check(CLI::IsMember({"line4"}));

  // precompute
  auto* pre = app.add_subcommand("precompute", "Build neighbor graphs and metric columns");
  std::string data_dir;
  std::vector<std::uint32_t> k_list;
  std::uint64_t seed = 0;
  bool force = false;
  pre->add_option("--data", data_dir, "Dataset directory (holds trace.json)")->required();
  pre->add_option("--k", k_list, "Neighborhood sizes, comma separated")->delimiter(',');
  auto* seed_opt = pre->add_option("--seed", seed, "Global seed");
  pre->add_flag("--force", force, "Recompute even when cached");

  // status
  auto* stat = app.add_subcommand("status", "Report cached and missing columns");
  stat->add_option("--data", data_dir, "Dataset directory")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a precomputed bundle over HTTP");
  int port = 8080;
  std::string bind = "127.0.0.1";
  std::string cors = "*";
  serve->add_option("--data", data_dir, "Dataset directory (falls back to $TRACE_DATA)");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--cors-origin", cors, "Allowed viewer origin");

  // bench
  auto* bench = app.add_subcommand("bench", "Time the full precompute on synthetic data");
  std::size_t bench_n = 1000, bench_d = 50, bench_emb = 5;
  std::uint32_t bench_k = 50;
  std::uint64_t bench_seed = 42;
  bench->add_option("--n", bench_n, "Number of points (>= 100)");
  bench->add_option("--d", bench_d, "Dimensions");
  bench->add_option("--embeddings", bench_emb, "Number of embeddings");
  bench->add_option("--k", bench_k, "Neighborhood size");
  bench->add_option("--seed", bench_seed, "Seed for the synthetic data");

  CLI11_PARSE(app, argc, argv);
  embedq::set_worker_count(threads);

  try {
    if (*gen) {
      if (fixture == "line4") {
        embedq::write_bundle(gen_out, embedq::make_line4_bundle(), gen_seed, {1});
      } else {
        embedq::write_bundle(gen_out,
                             embedq::make_demo_bundle(gen_n, gen_d, gen_clusters, gen_seed),
                             gen_seed);
      }
      std::cout << "wrote " << (fs::path(gen_out) / embedq::kManifestName).string() << "\n";
      return 0;
    }
    if (*pre) {
      const embedq::DatasetBundle bundle = embedq::load_bundle(data_dir);
      embedq::PrecomputeConfig config =
          embedq::PrecomputeConfig::from_manifest(bundle.manifest);
      if (!k_list.empty()) config.k_list = k_list;
      if (*seed_opt) config.seed = seed;
      config.force = force;
      embedq::PrecomputeReport report;
      embedq::precompute(bundle, config, &report);
      std::cout << "computed " << report.computed_columns << " columns and "
                << report.computed_graphs << " graphs, reused "
                << report.reused_columns << " columns in "
                << report.times.total() << " s\n";
      print_status(embedq::status(data_dir));
      return 0;
    }
    if (*stat) {
      print_status(embedq::status(data_dir));
      return 0;
    }
    if (*serve) {
      if (data_dir.empty()) {
        if (const char* env = std::getenv("TRACE_DATA")) data_dir = env;
      }
      if (data_dir.empty()) {
        return fail("invalid_argument", "no dataset: pass --data or set TRACE_DATA");
      }
      embedq::Service service =
          embedq::open_service(data_dir, embedq::ServiceOptions{cors});
      const auto& b = service.bundle();
      for (const auto& e : b.embeddings) {
        if (e.metrics.empty()) {
          std::cerr << "note: no cached metrics for '" << e.name
                    << "'; run `embedq precompute --data " << data_dir << "`\n";
        }
      }
      httplib::Server server;
      service.register_routes(server);
      // httplib defaults to SO_REUSEPORT, which lets a second server share
      // the port silently.
      server.set_socket_options([](int sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
      });
      if (!server.bind_to_port(bind, port)) {
        return fail("io", "cannot bind " + bind + ":" + std::to_string(port));
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving " << b.name << " (n=" << b.n() << ") on http://" << bind
                << ":" << port << std::endl;
      server.listen_after_bind();
      return 0;
    }
    if (*bench) {
      if (bench_n < 100) {
        return fail("invalid_argument", "bench needs --n >= 100");
      }
      embedq::DatasetBundle bundle =
          embedq::make_bench_bundle(bench_n, bench_d, bench_emb, bench_seed);
      embedq::PrecomputeConfig config;
      config.k_list = {bench_k};
      config.seed = bench_seed;
      const embedq::StageTimes t = embedq::compute_in_memory(bundle, config);
      const json report = {
          {"n", bench_n},
          {"d", bench_d},
          {"embedding_count", bench_emb},
          {"k", bench_k},
          {"seed", bench_seed},
          {"cores", std::thread::hardware_concurrency()},
          {"workers", embedq::worker_count()},
          {"stages",
           {{"hd_knn", t.hd_knn},
            {"ld_knn", t.ld_knn},
            {"preservation", t.preservation},
            {"triplets", t.triplets},
            {"rank_correlation", t.rank_correlation},
            {"stability", t.stability}}},
          {"total", t.total()}};
      std::cout << report.dump(2) << std::endl;
      return 0;
    }
  } catch (const embedq::Error& e) {
    return fail(embedq::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
