#include "cli.hpp"

#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "lexemb/run.hpp"

namespace lexemb {

namespace {

void spectral_options(CLI::App* cmd, SpectralParams& p, bool katz) {
    cmd->add_option("--dim", p.dim, "Output dimension")->capture_default_str();
    cmd->add_flag("!--no-center", p.center, "Skip mean-centering before PCA");
    if (katz) {
        cmd->add_option("--beta", p.beta, "Katz attenuation per hop")->capture_default_str();
        cmd->add_option("--katz-mode", p.katz_mode, "exact or truncated")
            ->transform(CLI::CheckedTransformer(
                std::map<std::string, KatzMode>{{"exact", KatzMode::exact}, {"truncated", KatzMode::truncated}}));
        cmd->add_option("--truncation-order", p.truncation_order, "Power terms in truncated mode")
            ->capture_default_str();
        cmd->add_option("--exact-max-size", p.exact_max_size, "Largest graph for exact Katz")->capture_default_str();
    }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    for (int i = 0; i < argc; ++i) c.argv.emplace_back(argv[i]);

    CLI::App app{"Lexical-knowledge word embeddings: build graphs, train embeddings, evaluate them."};
    app.name("lexemb");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML or INI file providing option values");
    std::uint64_t seed = 1;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized pipelines");
    app.add_option("--workers", c.workers, "Worker threads")->envname("LEXEMB_WORKERS")->capture_default_str();
    app.add_flag("--strict", c.strict, "Fail instead of defaulting a missing --seed");

    auto* swow = app.add_subcommand("ingest-swow", "SWOW strength TSV -> graph");
    swow->add_option("--input", c.input, "cue<TAB>response<TAB>slot<TAB>count file")->required();
    swow->add_option("--output", c.output, "Graph TSV to write")->required();
    swow->add_option("--mode", c.swow.mode, "combined or per-slot")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, SwowMode>{{"combined", SwowMode::combined}, {"per-slot", SwowMode::per_slot}}));
    swow->add_flag("!--drop-response-only", c.swow.keep_response_only, "Drop words never used as cues");

    auto* edges = app.add_subcommand("ingest-edgelist", "lhs<TAB>rel<TAB>rhs edge list -> graph");
    edges->add_option("--input", c.input)->required();
    edges->add_option("--output", c.output)->required();

    auto* sub = app.add_subcommand("subgraph", "Keep the k highest out-degree words");
    sub->add_option("--input", c.input)->required();
    sub->add_option("--output", c.output)->required();
    sub->add_option("--top-k", c.top_k, "Words to keep")->required();

    auto* embed = app.add_subcommand("embed", "Train embeddings from a graph");
    embed->require_subcommand(1);
    embed->fallthrough();
    embed->add_option("--input", c.input, "Graph TSV");
    embed->add_option("--output", c.output, "Embedding file (.bin for binary)");
    embed->add_option("--format", c.format, "text or binary (default from extension)")
        ->transform(CLI::CheckedTransformer(std::map<std::string, EmbeddingFormat>{
            {"text", EmbeddingFormat::text}, {"binary", EmbeddingFormat::binary}}));

    auto* pmi = embed->add_subcommand("pmi", "adjacency -> PPMI -> L2 -> PCA");
    spectral_options(pmi, c.spectral, false);
    auto* katz = embed->add_subcommand("katz", "adjacency -> Katz -> PPMI -> L2 -> PCA");
    spectral_options(katz, c.spectral, true);

    auto* walk = embed->add_subcommand("walk", "random-walk corpus -> skip-gram");
    walk->add_option("--alpha", c.walk.alpha, "Continuation probability")->capture_default_str();
    walk->add_option("--tokens", c.walk.token_budget, "Corpus token budget")->capture_default_str();
    walk->add_option("--max-walk-len", c.walk.max_walk_len, "Cap on walk length, 0 for none")->capture_default_str();
    walk->add_option("--shards", c.walk.shards, "Independent walk streams")->capture_default_str();
    walk->add_option("--dim", c.sgns.dim)->capture_default_str();
    walk->add_option("--window", c.sgns.window)->capture_default_str();
    walk->add_option("--negatives", c.sgns.negatives)->capture_default_str();
    walk->add_option("--epochs", c.sgns.epochs)->capture_default_str();
    walk->add_option("--lr", c.sgns.initial_lr, "Initial learning rate")->capture_default_str();
    walk->add_option("--min-count", c.sgns.min_count)->capture_default_str();
    walk->add_option("--subsample", c.sgns.subsample_t, "Subsampling threshold, 0 to disable")->capture_default_str();

    auto* sme = embed->add_subcommand("sme", "edge reconstruction (Semantic Matching Energy)");
    sme->add_option("--synset-edges", c.synset_edges, "synset_a<TAB>rel<TAB>synset_b file");
    sme->add_option("--synset-members", c.synset_members, "synset_id<TAB>word file");
    sme->add_option("--preset", c.sme_preset, "inference or feature (default from the graph)")
        ->transform(CLI::CheckedTransformer(std::map<std::string, SmePreset>{
            {"auto", SmePreset::automatic}, {"inference", SmePreset::inference}, {"feature", SmePreset::feature}}));
    sme->add_option("--dim", c.sme.dim)->capture_default_str();
    sme->add_option("--epochs", c.sme.epochs)->capture_default_str();
    sme->add_option("--eval-every", c.sme_eval_every);
    sme->add_option("--lr", c.sme_lr);
    sme->add_option("--batches", c.sme.n_batches)->capture_default_str();
    sme->add_option("--margin", c.sme.margin)->capture_default_str();
    sme->add_option("--valid-frac", c.sme.valid_frac)->capture_default_str();
    sme->add_option("--test-frac", c.sme.test_frac)->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Evaluate embeddings");
    eval->require_subcommand(1);
    eval->fallthrough();
    eval->add_option("--emb", c.embeddings, "Embedding file");
    eval->add_option("--output", c.output, "Also write the report here");

    auto* sim = eval->add_subcommand("sim", "Word-pair similarity (Spearman)");
    sim->add_option("--pairs", c.pairs, "word_a<TAB>word_b<TAB>score files")->delimiter(',')->required();

    auto* brain = eval->add_subcommand("brain", "fMRI activation prediction");
    brain->add_option("--fmri", c.fmri, "Canonical fMRI file")->required();
    brain->add_option("--folds", c.folds, "Sample this many 2v2 folds (default: all pairs)");
    brain->add_option("--metric", c.metric, "2v2 or mse")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, BrainMetric>{{"2v2", BrainMetric::two_vs_two}, {"mse", BrainMetric::mse}}));
    brain->add_option("--kfold", c.kfold, "Folds for the mse metric")->capture_default_str();
    brain->add_option("--epochs", c.decoder.epochs)->capture_default_str();
    brain->add_option("--batch-size", c.decoder.batch_size)->capture_default_str();
    brain->add_option("--lr", c.decoder.lr)->capture_default_str();
    brain->add_option("--huber-delta", c.decoder.huber_delta)->capture_default_str();
    brain->add_option("--l2", c.decoder.l2_weight)->capture_default_str();
    brain->add_option("--voxels", c.decoder.n_stable_voxels, "Stable voxels kept")->capture_default_str();

    auto* exp = app.add_subcommand("export", "Convert an embedding file between formats");
    exp->add_option("--input", c.input)->required();
    exp->add_option("--output", c.output)->required();
    exp->add_option("--format", c.format)
        ->transform(CLI::CheckedTransformer(std::map<std::string, EmbeddingFormat>{
            {"text", EmbeddingFormat::text}, {"binary", EmbeddingFormat::binary}}));

    auto* info = app.add_subcommand("info", "Summarize a graph, embedding or fMRI file");
    info->add_option("--input", c.input)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    if (seed_opt->count() > 0) c.seed = seed;

    if (swow->parsed()) c.command = Command::ingest_swow;
    else if (edges->parsed()) c.command = Command::ingest_edgelist;
    else if (sub->parsed()) c.command = Command::subgraph;
    else if (embed->parsed()) {
        c.command = Command::embed;
        if (pmi->parsed()) c.method = EmbedMethod::pmi;
        else if (katz->parsed()) c.method = EmbedMethod::katz;
        else if (walk->parsed()) c.method = EmbedMethod::walk;
        else c.method = EmbedMethod::sme;
    } else if (eval->parsed()) {
        c.command = sim->parsed() ? Command::eval_sim : Command::eval_brain;
    } else if (exp->parsed()) c.command = Command::export_embeddings;
    else c.command = Command::info;

    return run(c, out, err);
}

}  // namespace lexemb
