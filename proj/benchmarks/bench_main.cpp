#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "crowdslam/fingerprint.hpp"
#include "crowdslam/io.hpp"
#include "crowdslam/loop_closure.hpp"
#include "crowdslam/optimizer.hpp"
#include "crowdslam/pipeline.hpp"
#include "crowdslam/simulator.hpp"

using namespace crowdslam;

namespace {

const sim::Scenario& campus() {
    static const sim::Scenario scenario = [] {
        const auto text = io::read_file(CROWDSLAM_SCENARIO_DIR "/campus.json");
        return sim::generate_scenario(sim::ScenarioSpec::from_json(text));
    }();
    return scenario;
}

}  // namespace

static void BM_CosineSimilarity(benchmark::State& state) {
    sim::Rng rng(3);
    const auto env = sim::make_environment(130, 70, static_cast<std::size_t>(state.range(0)), -45, -35, rng);
    sim::NoiseModel noise;
    noise.detection_range = 1e6;
    const auto a = sample_rss(env, {20, 20, 0}, noise, rng);
    const auto b = sample_rss(env, {25, 22, 0}, noise, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cosine_similarity(a, b));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CosineSimilarity)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

static void BM_CandidateSearch(benchmark::State& state) {
    const auto& scenario = campus();
    const double theta_r = static_cast<double>(state.range(0));
    SlamConfig config;
    config.theta_r = theta_r;
    const auto table = train_from_tracks(scenario.tracks, config);
    const auto merged = merge_tracks(scenario.tracks, table, config.floor_dbm, config.theta_r);
    for (auto _ : state) {
        CandidateSearchStats stats;
        benchmark::DoNotOptimize(find_candidates(merged.nodes, config.screening, config.floor_dbm, &stats));
        state.counters["similarity_ops"] = static_cast<double>(stats.similarity_ops);
    }
}
BENCHMARK(BM_CandidateSearch)->Arg(-90)->Arg(-70)->Arg(-50)->Unit(benchmark::kMillisecond);

static void BM_Optimize(benchmark::State& state) {
    const auto& scenario = campus();
    SlamConfig config;
    const auto table = train_from_tracks(scenario.tracks, config);
    const auto merged = merge_tracks(scenario.tracks, table, config.floor_dbm, config.theta_r);
    const auto candidates = find_candidates(merged.nodes, config.screening, config.floor_dbm);
    const auto kept = screen_candidates(candidates, merged.nodes, config.screening);
    std::vector<Edge> loops;
    for (const auto& c : kept) {
        loops.push_back(candidate_to_edge(c, table));
    }
    const auto graph = build_graph(merged, loops, config.motion);
    for (auto _ : state) {
        auto g = graph;
        benchmark::DoNotOptimize(optimize(g, config.lm));
    }
    state.counters["edges"] = static_cast<double>(graph.edges.size());
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
