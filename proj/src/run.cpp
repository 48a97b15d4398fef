#include "lexemb/run.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lexemb/error.hpp"
#include "lexemb/manifest.hpp"
#include "lexemb/random.hpp"
#include "lexemb/similarity.hpp"
#include "text_util.hpp"

namespace lexemb {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

const char* command_name(const RunConfig& c) {
    switch (c.command) {
        case Command::ingest_swow: return "ingest-swow";
        case Command::ingest_edgelist: return "ingest-edgelist";
        case Command::subgraph: return "subgraph";
        case Command::embed:
            switch (c.method) {
                case EmbedMethod::pmi: return "embed pmi";
                case EmbedMethod::katz: return "embed katz";
                case EmbedMethod::walk: return "embed walk";
                case EmbedMethod::sme: return "embed sme";
            }
            break;
        case Command::eval_sim: return "eval sim";
        case Command::eval_brain: return "eval brain";
        case Command::export_embeddings: return "export";
        case Command::info: return "info";
    }
    return "?";
}

Json spectral_json(const SpectralParams& p, bool katz) {
    Json j;
    if (katz) {
        j["beta"] = p.beta;
        j["katz_mode"] = p.katz_mode == KatzMode::exact ? "exact" : "truncated";
        j["truncation_order"] = p.truncation_order;
    }
    j["dim"] = p.dim;
    j["center"] = p.center;
    return j;
}

Json walk_json(const WalkParams& w, const SgnsParams& s) {
    return {{"alpha", w.alpha},         {"token_budget", w.token_budget}, {"max_walk_len", w.max_walk_len},
            {"shards", w.shards},       {"dim", s.dim},                   {"window", s.window},
            {"negatives", s.negatives}, {"epochs", s.epochs},             {"initial_lr", s.initial_lr},
            {"final_lr", s.final_lr},   {"min_count", s.min_count},       {"subsample_t", s.subsample_t}};
}

Json sme_json(const SmeTrainParams& p) {
    return {{"dim", p.dim},           {"epochs", p.epochs},         {"eval_every", p.eval_every},
            {"lr", p.lr},             {"n_batches", p.n_batches},   {"margin", p.margin},
            {"valid_frac", p.valid_frac}, {"test_frac", p.test_frac}};
}

Json decoder_json(const DecoderParams& p) {
    return {{"epochs", p.epochs},         {"batch_size", p.batch_size}, {"lr", p.lr},
            {"huber_delta", p.huber_delta}, {"l2_weight", p.l2_weight}, {"n_stable_voxels", p.n_stable_voxels}};
}

Json digest_json(const std::string& path) {
    const auto d = digest_file(path);
    return {{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}};
}

class Runner {
public:
    Runner(const RunConfig& c, std::ostream& out, std::ostream& err) : c_(c), out_(out), err_(err) {}

    int execute() {
        if (c_.workers < 1) throw Error("worker count must be positive");
        if (needs_seed(c_) && !c_.seed) {
            if (c_.strict) throw Error(std::string(command_name(c_)) + " is randomized: --seed is required in strict mode");
            err_ << "warning: no --seed given, using 1\n";
        }
        seed_ = c_.seed.value_or(1);
        switch (c_.command) {
            case Command::ingest_swow: ingest_swow_cmd(); break;
            case Command::ingest_edgelist: ingest_edgelist_cmd(); break;
            case Command::subgraph: subgraph_cmd(); break;
            case Command::embed: embed_cmd(); break;
            case Command::eval_sim: eval_sim_cmd(); break;
            case Command::eval_brain: eval_brain_cmd(); break;
            case Command::export_embeddings: export_cmd(); break;
            case Command::info: info_cmd(); break;
        }
        return 0;
    }

private:
    void require_input(const std::string& path, const char* flag) {
        if (path.empty()) throw Error(std::string(command_name(c_)) + " needs " + flag);
        if (!fs::exists(path)) throw Error("input '" + path + "' does not exist");
        inputs_.push_back(path);
    }

    void require_output() {
        if (c_.output.empty()) throw Error(std::string(command_name(c_)) + " needs --output");
    }

    void add_output(const std::string& path) {
        outputs_.push_back(path);
        if (fs::exists(sidecar_path(path))) outputs_.push_back(sidecar_path(path));
    }

    void write_manifest() {
        if (outputs_.empty()) return;
        Json m;
        m["tool"] = "lexemb";
        m["version"] = kVersion;
        m["command"] = command_name(c_);
        m["argv"] = c_.argv;
        m["inputs"] = Json::array();
        for (const auto& p : inputs_) m["inputs"].push_back(digest_json(p));
        m["parameters"] = params_;
        if (needs_seed(c_)) m["seed"] = seed_;
        else m["seed"] = nullptr;
        m["workers"] = c_.workers;
        if (!metrics_.empty()) m["metrics"] = metrics_;
        m["outputs"] = Json::array();
        for (const auto& p : outputs_) m["outputs"].push_back(digest_json(p));
        const auto path = manifest_path(outputs_.front());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write manifest '" + path + "'");
        f << m.dump(2) << '\n';
        f.close();
        if (!f) throw Error("failed writing manifest '" + path + "'");
    }

    void save_graph_output(const LexicalGraph& g) {
        save_graph(g, c_.output);
        add_output(c_.output);
        metrics_["nodes"] = g.num_nodes();
        metrics_["edges"] = g.num_edges();
        write_manifest();
        out_ << c_.output << '\t' << g.num_nodes() << " nodes\t" << g.num_edges() << " edges\n";
    }

    void ingest_swow_cmd() {
        require_input(c_.input, "--input");
        require_output();
        std::ifstream in(c_.input);
        if (!in) throw Error("cannot open '" + c_.input + "'");
        params_["mode"] = c_.swow.mode == SwowMode::combined ? "combined" : "per-slot";
        params_["keep_response_only"] = c_.swow.keep_response_only;
        save_graph_output(ingest_swow(read_swow_tsv(in, c_.input), c_.swow));
    }

    void ingest_edgelist_cmd() {
        require_input(c_.input, "--input");
        require_output();
        std::ifstream in(c_.input);
        if (!in) throw Error("cannot open '" + c_.input + "'");
        save_graph_output(ingest_edge_list(read_edge_list_tsv(in, c_.input)));
    }

    void subgraph_cmd() {
        require_input(c_.input, "--input");
        require_output();
        params_["top_k"] = c_.top_k;
        save_graph_output(select_subgraph(load_graph(c_.input), c_.top_k));
    }

    void save_embedding_output(const EmbeddingMatrix& e) {
        write_embeddings(e, c_.output, c_.format.value_or(format_for_path(c_.output)));
        add_output(c_.output);
        metrics_["words"] = e.size();
        metrics_["dim"] = e.dim();
        write_manifest();
        out_ << c_.output << '\t' << e.size() << " words\t" << e.dim() << " dims\n";
    }

    void embed_cmd() {
        require_input(c_.input, "--input");
        require_output();
        const LexicalGraph g = load_graph(c_.input);
        switch (c_.method) {
            case EmbedMethod::pmi:
                params_ = spectral_json(c_.spectral, false);
                save_embedding_output(pipeline_pmi(g, c_.spectral));
                break;
            case EmbedMethod::katz:
                params_ = spectral_json(c_.spectral, true);
                save_embedding_output(pipeline_katz(g, c_.spectral));
                break;
            case EmbedMethod::walk: {
                WalkParams wp = c_.walk;
                wp.seed = derive_seed(seed_, 1);
                wp.workers = c_.workers;
                SgnsParams sp = c_.sgns;
                sp.seed = derive_seed(seed_, 2);
                params_ = walk_json(wp, sp);
                save_embedding_output(pipeline_walk(g, wp, sp));
                break;
            }
            case EmbedMethod::sme: embed_sme(g); break;
        }
    }

    void embed_sme(const LexicalGraph& g) {
        TripleSet triples;
        bool association = false;
        if (!c_.synset_edges.empty() || !c_.synset_members.empty()) {
            require_input(c_.synset_edges, "--synset-edges");
            require_input(c_.synset_members, "--synset-members");
            std::ifstream edges(c_.synset_edges), members(c_.synset_members);
            triples = wordnet_triples(read_synset_edges_tsv(edges, c_.synset_edges),
                                      read_synset_members_tsv(members, c_.synset_members), g.vocab());
        } else {
            association = !g.relation_labels().empty();
            for (const auto& r : g.relation_labels()) association = association && (r == "R1" || r == "R2" || r == "R3");
            triples = association ? swow_triples(g) : graph_triples(g);
        }
        if (triples.size() == 0) throw Error("no triples to train on");

        SmeTrainParams p = c_.sme;
        const bool feature = c_.sme_preset == SmePreset::feature ||
                             (c_.sme_preset == SmePreset::automatic && association);
        const SmeTrainParams preset = feature ? SmeTrainParams::feature_based() : SmeTrainParams::inference_based();
        p.lr = c_.sme_lr.value_or(preset.lr);
        p.eval_every = c_.sme_eval_every.value_or(preset.eval_every);
        p.seed = derive_seed(seed_, 2);
        params_ = sme_json(p);
        params_["preset"] = feature ? "feature" : "inference";
        params_["triples"] = triples.size();

        const auto split = split_triples(triples, p.valid_frac, p.test_frac, derive_seed(seed_, 1));
        const auto result = train_sme(split.train, split.valid, p);
        metrics_["best_epoch"] = result.best_epoch;
        if (!result.history.empty()) {
            for (const auto& h : result.history) {
                if (h.epoch == result.best_epoch) metrics_["valid_mean_rank"] = h.mean_rank;
            }
        }
        if (split.test.size() > 0) metrics_["test_mean_rank"] = sme_mean_rank(result.model, split.test.triples);
        save_embedding_output(result.embeddings);
    }

    /// Writes a report to stdout and, with --output, to a file plus manifest.
    void emit_report(const std::string& report) {
        out_ << report;
        if (c_.output.empty()) return;
        std::ofstream f(c_.output, std::ios::binary);
        if (!f) throw Error("cannot write '" + c_.output + "'");
        f << report;
        f.close();
        if (!f) throw Error("failed writing '" + c_.output + "'");
        add_output(c_.output);
        write_manifest();
    }

    void eval_sim_cmd() {
        require_input(c_.embeddings, "--emb");
        if (c_.pairs.empty()) throw Error("eval sim needs --pairs");
        for (const auto& p : c_.pairs) require_input(p, "--pairs");
        const auto e = read_embeddings(c_.embeddings);
        std::ostringstream report;
        report << "dataset\trho\tn_scored\tcoverage\n";
        for (const auto& path : c_.pairs) {
            const auto d = load_pair_dataset(path);
            const auto r = evaluate_similarity(e, d);
            report << d.name << '\t' << std::fixed << std::setprecision(6) << r.rho << '\t' << r.n_scored << '\t'
                   << r.coverage << '\n';
            metrics_[d.name] = {{"rho", r.rho}, {"n_scored", r.n_scored}, {"coverage", r.coverage}};
        }
        emit_report(report.str());
    }

    void eval_brain_cmd() {
        require_input(c_.embeddings, "--emb");
        require_input(c_.fmri, "--fmri");
        const auto e = read_embeddings(c_.embeddings);
        const auto d = load_fmri(c_.fmri);
        DecoderParams p = c_.decoder;
        p.seed = seed_;
        params_ = decoder_json(p);
        std::ostringstream report;
        report << "participant\tmetric\tvalue\tfolds\n";
        if (c_.metric == BrainMetric::two_vs_two) {
            params_["fold_limit"] = c_.folds ? Json(*c_.folds) : Json(nullptr);
            const auto r = two_vs_two(e, d, p, c_.folds, c_.workers);
            report << d.participant_id << "\t2v2\t" << std::fixed << std::setprecision(6) << r.accuracy << '\t'
                   << r.folds << '\n';
            metrics_ = {{"accuracy", r.accuracy}, {"folds", r.folds}, {"correct", r.correct}};
        } else {
            params_["kfold"] = c_.kfold;
            const auto r = mse_eval(e, d, p, c_.kfold, c_.workers);
            report << d.participant_id << "\tmse\t" << std::setprecision(9) << r.mse << '\t' << r.folds << '\n';
            metrics_ = {{"mse", r.mse}, {"folds", r.folds}};
        }
        emit_report(report.str());
    }

    void export_cmd() {
        require_input(c_.input, "--input");
        require_output();
        const auto fmt = c_.format.value_or(format_for_path(c_.output));
        params_["format"] = fmt == EmbeddingFormat::binary ? "binary" : "text";
        save_embedding_output(read_embeddings(c_.input));
    }

    void info_cmd() {
        require_input(c_.input, "--input");
        std::ifstream in(c_.input, std::ios::binary);
        std::string first;
        std::getline(in, first);
        if (first.starts_with("LXFMRI") || first.starts_with("#!participant")) {
            const auto d = load_fmri(c_.input);
            out_ << "kind\tfmri\nparticipant\t" << d.participant_id << "\nwords\t" << d.n_words() << "\nvoxels\t"
                 << d.voxel_count << "\nmin_presentations\t" << d.min_presentations() << "\ngrid\t" << d.grid_dims[0]
                 << 'x' << d.grid_dims[1] << 'x' << d.grid_dims[2] << "\nvoxel_size\t" << d.voxel_size << '\n';
        } else if (first.starts_with("# lexemb graph") || first.starts_with("#!node")) {
            const auto g = load_graph(c_.input);
            out_ << "kind\tgraph\nnodes\t" << g.num_nodes() << "\nedges\t" << g.num_edges() << "\nrelations\t";
            for (std::size_t i = 0; i < g.relation_labels().size(); ++i) out_ << (i ? "," : "") << g.relation_labels()[i];
            out_ << '\n';
        } else {
            const auto e = read_embeddings(c_.input);
            out_ << "kind\tembeddings\nwords\t" << e.size() << "\ndim\t" << e.dim() << '\n';
        }
        out_ << "sha256\t" << sha256_file(c_.input) << '\n';
    }

    const RunConfig& c_;
    std::ostream& out_;
    std::ostream& err_;
    std::uint64_t seed_ = 1;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
    Json params_ = Json::object();
    Json metrics_ = Json::object();
};

}  // namespace

bool needs_seed(const RunConfig& c) {
    return (c.command == Command::embed && (c.method == EmbedMethod::walk || c.method == EmbedMethod::sme)) ||
           c.command == Command::eval_brain;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        return Runner(c, out, err).execute();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lexemb
