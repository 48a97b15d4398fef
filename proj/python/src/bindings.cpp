#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "lexemb/brain.hpp"
#include "lexemb/embedding_io.hpp"
#include "lexemb/error.hpp"
#include "lexemb/graph.hpp"
#include "lexemb/random.hpp"
#include "lexemb/similarity.hpp"
#include "lexemb/sme.hpp"
#include "lexemb/spectral.hpp"
#include "lexemb/walk.hpp"

namespace py = pybind11;
using namespace lexemb;

namespace {

EmbeddingMatrix make_embeddings(const std::vector<std::string>& words, const RowMatrix& vectors) {
    if (static_cast<Eigen::Index>(words.size()) != vectors.rows()) {
        throw Error("got " + std::to_string(words.size()) + " words for " + std::to_string(vectors.rows()) + " rows");
    }
    EmbeddingMatrix e;
    for (const auto& w : words) {
        if (e.vocab.contains(w)) throw Error("duplicate word '" + w + "'");
        e.vocab.add(w);
    }
    e.vectors = vectors;
    return e;
}

LexicalGraph swow_file(const std::string& path, SwowMode mode, bool keep_response_only) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return ingest_swow(read_swow_tsv(in, path), {mode, keep_response_only});
}

LexicalGraph edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return ingest_edge_list(read_edge_list_tsv(in, path));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Word embeddings from lexical knowledge graphs, and their evaluation.";
    py::register_exception<Error>(m, "LexembError", PyExc_ValueError);

    py::enum_<SwowMode>(m, "SwowMode").value("combined", SwowMode::combined).value("per_slot", SwowMode::per_slot);
    py::enum_<KatzMode>(m, "KatzMode").value("exact", KatzMode::exact).value("truncated", KatzMode::truncated);
    py::enum_<EmbeddingFormat>(m, "EmbeddingFormat")
        .value("text", EmbeddingFormat::text)
        .value("binary", EmbeddingFormat::binary);

    py::class_<LexicalGraph>(m, "Graph")
        .def_property_readonly("words", [](const LexicalGraph& g) { return g.vocab().words(); })
        .def_property_readonly("relations", &LexicalGraph::relation_labels)
        .def_property_readonly("num_nodes", &LexicalGraph::num_nodes)
        .def_property_readonly("num_edges", &LexicalGraph::num_edges)
        .def("edges",
             [](const LexicalGraph& g) {
                 std::vector<std::tuple<std::string, std::string, std::string, double>> out;
                 for (const auto& e : g.edges()) {
                     out.emplace_back(g.vocab().word(e.src), g.relation_labels()[e.rel], g.vocab().word(e.dst),
                                      e.weight);
                 }
                 return out;
             },
             "(src, relation, dst, weight) tuples in storage order")
        .def("out_degrees", &LexicalGraph::out_degrees)
        .def("adjacency",
             [](const LexicalGraph& g) { return RowMatrix(to_adjacency(g).values); },
             "Dense adjacency with summed weights over all relations")
        .def("__eq__", [](const LexicalGraph& a, const LexicalGraph& b) { return a == b; })
        .def("__repr__", [](const LexicalGraph& g) {
            return "<Graph " + std::to_string(g.num_nodes()) + " nodes, " + std::to_string(g.num_edges()) + " edges>";
        });

    m.def("ingest_swow", &swow_file, py::arg("path"), py::arg("mode") = SwowMode::combined,
          py::arg("keep_response_only") = true);
    m.def("ingest_edge_list", &edge_list_file, py::arg("path"));
    m.def("load_graph", &load_graph, py::arg("path"));
    m.def("save_graph", &save_graph, py::arg("graph"), py::arg("path"));
    m.def("select_subgraph", &select_subgraph, py::arg("graph"), py::arg("k"));

    py::class_<EmbeddingMatrix>(m, "Embeddings")
        .def(py::init(&make_embeddings), py::arg("words"), py::arg("vectors"))
        .def_property_readonly("words", [](const EmbeddingMatrix& e) { return e.vocab.words(); })
        .def_property_readonly("vectors", [](const EmbeddingMatrix& e) { return e.vectors; })
        .def_property_readonly("dim", &EmbeddingMatrix::dim)
        .def("__len__", &EmbeddingMatrix::size)
        .def("__contains__", [](const EmbeddingMatrix& e, const std::string& w) { return e.vocab.contains(w); })
        .def("__getitem__", [](const EmbeddingMatrix& e, const std::string& w) -> Vector {
            const auto row = e.row_of(w);
            if (!row) throw py::key_error(w);
            return e.vectors.row(*row).transpose();
        })
        .def("__repr__", [](const EmbeddingMatrix& e) {
            return "<Embeddings " + std::to_string(e.size()) + " x " + std::to_string(e.dim()) + ">";
        });

    m.def("read_embeddings", py::overload_cast<const std::string&>(&read_embeddings), py::arg("path"));
    m.def("write_embeddings", py::overload_cast<const EmbeddingMatrix&, const std::string&>(&write_embeddings),
          py::arg("embeddings"), py::arg("path"));

    m.def(
        "embed_pmi",
        [](const LexicalGraph& g, std::size_t dim, bool center) {
            SpectralParams p;
            p.dim = dim;
            p.center = center;
            return pipeline_pmi(g, p);
        },
        py::arg("graph"), py::arg("dim") = 300, py::arg("center") = true);
    m.def(
        "embed_katz",
        [](const LexicalGraph& g, std::size_t dim, double beta, KatzMode mode, std::size_t truncation_order,
           bool center) {
            SpectralParams p;
            p.dim = dim;
            p.beta = beta;
            p.katz_mode = mode;
            p.truncation_order = truncation_order;
            p.center = center;
            return pipeline_katz(g, p);
        },
        py::arg("graph"), py::arg("dim") = 300, py::arg("beta") = 0.5, py::arg("mode") = KatzMode::exact,
        py::arg("truncation_order") = 50, py::arg("center") = true);
    m.def(
        "embed_walk",
        [](const LexicalGraph& g, std::uint64_t seed, std::size_t dim, double alpha, std::uint64_t tokens,
           std::size_t max_walk_len, std::size_t window, std::size_t negatives, std::size_t epochs,
           std::size_t min_count, double subsample) {
            WalkParams wp;
            wp.alpha = alpha;
            wp.token_budget = tokens;
            wp.max_walk_len = max_walk_len;
            wp.seed = derive_seed(seed, 1);
            SgnsParams sp;
            sp.dim = dim;
            sp.window = window;
            sp.negatives = negatives;
            sp.epochs = epochs;
            sp.min_count = min_count;
            sp.subsample_t = subsample;
            sp.seed = derive_seed(seed, 2);
            py::gil_scoped_release release;
            return pipeline_walk(g, wp, sp);
        },
        py::arg("graph"), py::arg("seed"), py::arg("dim") = 300, py::arg("alpha") = 0.85,
        py::arg("tokens") = 20'000'000, py::arg("max_walk_len") = 100, py::arg("window") = 5,
        py::arg("negatives") = 5, py::arg("epochs") = 5, py::arg("min_count") = 5, py::arg("subsample") = 1e-3);
    m.def(
        "embed_sme",
        [](const LexicalGraph& g, std::uint64_t seed, std::size_t dim, std::size_t epochs, double lr,
           std::size_t eval_every, std::size_t n_batches, double margin) {
            SmeTrainParams p;
            p.dim = dim;
            p.epochs = epochs;
            p.lr = lr;
            p.eval_every = eval_every;
            p.n_batches = n_batches;
            p.margin = margin;
            p.seed = derive_seed(seed, 2);
            const auto split = split_triples(graph_triples(g), p.valid_frac, p.test_frac, derive_seed(seed, 1));
            py::gil_scoped_release release;
            return train_sme(split.train, split.valid, p).embeddings;
        },
        py::arg("graph"), py::arg("seed"), py::arg("dim") = 300, py::arg("epochs") = 500, py::arg("lr") = 0.01,
        py::arg("eval_every") = 10, py::arg("n_batches") = 200, py::arg("margin") = 1.0);

    m.def("cosine", &cosine, py::arg("u"), py::arg("v"));
    m.def(
        "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("rho", &SimResult::rho)
        .def_readonly("n_scored", &SimResult::n_scored)
        .def_readonly("coverage", &SimResult::coverage)
        .def("__repr__", [](const SimResult& r) {
            std::ostringstream s;
            s << "<SimResult rho=" << r.rho << " n_scored=" << r.n_scored << " coverage=" << r.coverage << ">";
            return s.str();
        });
    m.def(
        "evaluate_similarity",
        [](const EmbeddingMatrix& e, const std::string& pairs_path) {
            return evaluate_similarity(e, load_pair_dataset(pairs_path));
        },
        py::arg("embeddings"), py::arg("pairs_path"));

    py::class_<FmriDataset>(m, "FmriDataset")
        .def_readonly("participant_id", &FmriDataset::participant_id)
        .def_readonly("words", &FmriDataset::words)
        .def_readonly("voxel_count", &FmriDataset::voxel_count)
        .def_readonly("grid_dims", &FmriDataset::grid_dims)
        .def_readonly("voxel_size", &FmriDataset::voxel_size)
        .def("presentations", [](const FmriDataset& d, std::size_t word) { return d.presentations.at(word); },
             py::arg("word"))
        .def("representative_images", &representative_images);
    m.def("load_fmri", &load_fmri, py::arg("path"));

    py::class_<TwoVsTwoResult>(m, "TwoVsTwoResult")
        .def_readonly("accuracy", &TwoVsTwoResult::accuracy)
        .def_readonly("folds", &TwoVsTwoResult::folds)
        .def_readonly("correct", &TwoVsTwoResult::correct);
    m.def(
        "two_vs_two",
        [](const EmbeddingMatrix& e, const FmriDataset& d, std::uint64_t seed, std::optional<std::size_t> folds,
           std::size_t epochs, double lr, std::size_t voxels, std::size_t workers) {
            DecoderParams p;
            p.seed = seed;
            p.epochs = epochs;
            p.lr = lr;
            p.n_stable_voxels = voxels;
            py::gil_scoped_release release;
            return two_vs_two(e, d, p, folds, workers);
        },
        py::arg("embeddings"), py::arg("fmri"), py::arg("seed"), py::arg("folds") = py::none(),
        py::arg("epochs") = 1000, py::arg("lr") = 0.001, py::arg("voxels") = 500, py::arg("workers") = 1);

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"lexemb"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (status, stdout, stderr).");
}
