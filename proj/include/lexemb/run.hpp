#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lexemb/brain.hpp"
#include "lexemb/embedding_io.hpp"
#include "lexemb/graph.hpp"
#include "lexemb/sme.hpp"
#include "lexemb/spectral.hpp"
#include "lexemb/walk.hpp"

namespace lexemb {

enum class Command { ingest_swow, ingest_edgelist, subgraph, embed, eval_sim, eval_brain, export_embeddings, info };
enum class EmbedMethod { pmi, katz, walk, sme };
enum class BrainMetric { two_vs_two, mse };
enum class SmePreset { automatic, inference, feature };

/// Everything one invocation needs. Fields not used by `command` are ignored.
struct RunConfig {
    Command command = Command::info;
    std::string input;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    bool strict = false;

    SwowIngestOptions swow;
    std::size_t top_k = 0;

    EmbedMethod method = EmbedMethod::pmi;
    SpectralParams spectral;
    WalkParams walk;
    SgnsParams sgns;
    SmeTrainParams sme;
    SmePreset sme_preset = SmePreset::automatic;
    /// Explicit values win over the preset.
    std::optional<double> sme_lr;
    std::optional<std::size_t> sme_eval_every;
    std::string synset_edges;
    std::string synset_members;

    std::string embeddings;
    std::vector<std::string> pairs;
    std::string fmri;
    BrainMetric metric = BrainMetric::two_vs_two;
    std::optional<std::size_t> folds;
    std::size_t kfold = 5;
    DecoderParams decoder;

    std::optional<EmbeddingFormat> format;

    /// Command line that produced the config, recorded in the manifest.
    std::vector<std::string> argv;
};

/// Whether `c` runs a randomized pipeline (and so needs a seed in strict mode).
bool needs_seed(const RunConfig& c);

/// Executes the command. Reports go to `out`, diagnostics to `err`. Every
/// written file gets a `<output>.manifest.json` with inputs, parameters, seed
/// and output digests. Returns a process exit status.
int run(const RunConfig& c, std::ostream& out, std::ostream& err);

std::string manifest_path(const std::string& output);

}  // namespace lexemb
