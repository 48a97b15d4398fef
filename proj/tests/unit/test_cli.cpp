#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "lexemb/brain.hpp"
#include "lexemb/embedding_io.hpp"
#include "lexemb/manifest.hpp"
#include "lexemb/random.hpp"
#include "brain_fixtures.hpp"

using namespace lexemb;
namespace fs = std::filesystem;

namespace {

const std::string fixtures = LEXEMB_FIXTURES;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("lexemb_cli_" + std::to_string(Rng(std::random_device{}()).next()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lexemb");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

nlohmann::json manifest(const std::string& output) {
    std::ifstream in(output + ".manifest.json");
    REQUIRE(in);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("embed pmi on the toy SWOW file writes embeddings and a manifest") {
    TempDir dir;
    const auto graph = dir.file("g.tsv"), emb = dir.file("e.txt");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    auto r = cli({"embed", "pmi", "--input", graph, "--output", emb, "--dim", "4"});
    REQUIRE_MESSAGE(r.status == 0, r.err);

    auto e = read_embeddings(emb);
    CHECK(e.dim() == 4);
    CHECK(e.size() > 0);

    auto m = manifest(emb);
    CHECK(m["command"] == "embed pmi");
    CHECK(m["inputs"][0]["sha256"] == sha256_file(graph));
    CHECK(m["outputs"][0]["sha256"] == sha256_file(emb));
    CHECK(m["parameters"]["dim"] == 4);
    CHECK(m["seed"].is_null());
}

TEST_CASE("unknown subcommand prints usage and fails") {
    auto r = cli({"frobnicate"});
    CHECK(r.status != 0);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(cli({"embed", "glove", "--input", "x"}).status != 0);
    CHECK(cli({}).status != 0);
}

TEST_CASE("bad parameter values fail before anything is written") {
    TempDir dir;
    const auto graph = dir.file("g.tsv");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    CHECK(cli({"embed", "katz", "--input", graph, "--output", dir.file("k.txt"), "--katz-mode", "sideways"}).status ==
          2);
    auto r = cli({"embed", "pmi", "--input", graph, "--output", dir.file("p.txt"), "--dim", "0"});
    CHECK(r.status == 1);
    CHECK(r.err.find("error:") == 0);
    CHECK_FALSE(fs::exists(dir.file("p.txt")));
    CHECK(cli({"embed", "pmi", "--input", dir.file("missing.tsv"), "--output", dir.file("q.txt")}).status == 1);
}

TEST_CASE("strict mode requires a seed for randomized pipelines") {
    TempDir dir;
    const auto graph = dir.file("g.tsv");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    auto r = cli({"--strict", "embed", "walk", "--input", graph, "--output", dir.file("w.txt")});
    CHECK(r.status == 1);
    CHECK(r.err.find("--seed") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.file("w.txt")));
    // Deterministic pipelines run without one.
    CHECK(cli({"--strict", "embed", "pmi", "--input", graph, "--output", dir.file("p.txt"), "--dim", "3"}).status ==
          0);
    // Outside strict mode a missing seed is a warning.
    auto lax = cli({"embed", "sme", "--input", graph, "--output", dir.file("s.txt"), "--dim", "3", "--epochs", "2"});
    CHECK(lax.status == 0);
    CHECK(lax.err.find("warning") != std::string::npos);
}

TEST_CASE("same config and seed give identical output digests") {
    TempDir dir;
    const auto graph = dir.file("g.tsv");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    const std::vector<std::vector<std::string>> pipelines = {
        {"embed", "pmi", "--dim", "4"},
        {"embed", "katz", "--dim", "4", "--beta", "0.001"},
        {"embed", "walk", "--dim", "4", "--tokens", "5000", "--epochs", "2"},
        {"embed", "sme", "--dim", "4", "--epochs", "10"},
    };
    for (const auto& p : pipelines) {
        std::string digest[2];
        for (int k = 0; k < 2; ++k) {
            auto args = p;
            const auto out = dir.file(p[1] + std::to_string(k) + ".txt");
            args.insert(args.begin(), {"--seed", "1147"});
            args.insert(args.end(), {"--input", graph, "--output", out});
            auto r = cli(args);
            REQUIRE_MESSAGE(r.status == 0, r.err);
            digest[k] = manifest(out)["outputs"][0]["sha256"];
        }
        CHECK_MESSAGE(digest[0] == digest[1], p[1]);
    }
}

TEST_CASE("edge list, subgraph, export and info") {
    TempDir dir;
    const auto graph = dir.file("g.tsv"), small = dir.file("s.tsv");
    REQUIRE(cli({"ingest-edgelist", "--input", fixtures + "/toy_edges.tsv", "--output", graph}).status == 0);
    REQUIRE(cli({"subgraph", "--input", graph, "--output", small, "--top-k", "3"}).status == 0);
    auto info = cli({"info", "--input", small});
    REQUIRE(info.status == 0);
    CHECK(info.out.find("kind\tgraph") != std::string::npos);

    const auto txt = dir.file("e.txt"), bin = dir.file("e.bin"), back = dir.file("back.txt");
    REQUIRE(cli({"embed", "pmi", "--input", graph, "--output", txt, "--dim", "2"}).status == 0);
    REQUIRE(cli({"export", "--input", txt, "--output", bin}).status == 0);
    REQUIRE(cli({"export", "--input", bin, "--output", back, "--format", "text"}).status == 0);
    auto a = read_embeddings(txt), b = read_embeddings(back);
    CHECK(a.vocab.words() == b.vocab.words());
    CHECK((a.vectors.cast<float>().cast<double>() - b.vectors).cwiseAbs().maxCoeff() == 0.0);
    CHECK(cli({"info", "--input", bin}).out.find("kind\tembeddings") != std::string::npos);
}

TEST_CASE("eval sim reports one line per dataset") {
    TempDir dir;
    const auto graph = dir.file("g.tsv"), emb = dir.file("e.txt"), report = dir.file("r.tsv");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    REQUIRE(cli({"embed", "pmi", "--input", graph, "--output", emb, "--dim", "4"}).status == 0);
    const auto pairs = fixtures + "/toy_pairs.tsv";
    auto r = cli({"eval", "--emb", emb, "--output", report, "sim", "--pairs", pairs + "," + pairs});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    std::istringstream lines(r.out);
    std::string line;
    int n = 0;
    std::getline(lines, line);
    CHECK(line == "dataset\trho\tn_scored\tcoverage");
    while (std::getline(lines, line)) {
        CHECK(line.rfind("toy_pairs\t", 0) == 0);
        ++n;
    }
    CHECK(n == 2);
    CHECK(fs::exists(report));
    CHECK(manifest(report)["metrics"].is_object());
}

TEST_CASE("eval brain on a synthetic participant") {
    TempDir dir;
    auto syn = fixture::linear_fmri(8, 3, 12, 2, 0.0, 5);
    const auto emb = dir.file("e.txt"), fmri = dir.file("p.lxf");
    write_embeddings(syn.emb, emb);
    save_fmri(syn.data, fmri);
    auto r = cli({"--seed", "3", "eval", "--emb", emb, "brain", "--fmri", fmri, "--folds", "6", "--epochs", "50",
                  "--lr", "0.5", "--voxels", "12"});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(r.out.find("participant\tmetric\tvalue\tfolds") == 0);
    CHECK(r.out.find("\t2v2\t") != std::string::npos);
    CHECK(r.out.find("\t6\n") != std::string::npos);
    auto m = cli({"--seed", "3", "eval", "--emb", emb, "brain", "--fmri", fmri, "--metric", "mse", "--kfold", "4",
                  "--epochs", "20", "--voxels", "12"});
    REQUIRE_MESSAGE(m.status == 0, m.err);
    CHECK(m.out.find("\tmse\t") != std::string::npos);
}

TEST_CASE("worker count comes from the environment unless given") {
    TempDir dir;
    const auto graph = dir.file("g.tsv"), emb = dir.file("e.txt");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    ::setenv("LEXEMB_WORKERS", "3", 1);
    REQUIRE(cli({"embed", "pmi", "--input", graph, "--output", emb, "--dim", "2"}).status == 0);
    CHECK(manifest(emb)["workers"] == 3);
    REQUIRE(cli({"--workers", "2", "embed", "pmi", "--input", graph, "--output", emb, "--dim", "2"}).status == 0);
    CHECK(manifest(emb)["workers"] == 2);
    ::unsetenv("LEXEMB_WORKERS");
}

TEST_CASE("options can come from a config file") {
    TempDir dir;
    const auto graph = dir.file("g.tsv"), emb = dir.file("e.txt"), cfg = dir.file("run.toml");
    REQUIRE(cli({"ingest-swow", "--input", fixtures + "/toy_swow.tsv", "--output", graph}).status == 0);
    std::ofstream(cfg) << "seed = 1256\n";
    auto r = cli({"--config", cfg, "embed", "walk", "--input", graph, "--output", emb, "--dim", "2", "--tokens",
                  "2000", "--epochs", "1"});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(manifest(emb)["seed"] == 1256);
}
