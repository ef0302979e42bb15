#include "synthval/upca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "synthval/error.hpp"
#include "synthval/linalg.hpp"

namespace synthval {

double UpcaModel::project(const MetricVector& v) const {
    const auto x = v.as_array();
    double u = 0.0;
    for (std::size_t d = 0; d < 4; ++d) {
        if (!std::isfinite(x[d])) throw PreconditionError(std::string("non-finite ") + kMetricNames[d] + " value");
        u += loadings[d] * (x[d] - means[d]) / stddevs[d];
    }
    return u;
}

UpcaModel fit_upca(std::span<const MetricVector> corpus) {
    if (corpus.size() < kMinUpcaCorpus) {
        throw PreconditionError("u_pca corpus needs at least " + std::to_string(kMinUpcaCorpus) + " metric vectors, got " +
                                std::to_string(corpus.size()));
    }
    const double n = static_cast<double>(corpus.size());
    UpcaModel model;
    model.corpus_size = corpus.size();
    for (const auto& v : corpus) {
        const auto x = v.as_array();
        for (std::size_t d = 0; d < 4; ++d) {
            if (!std::isfinite(x[d])) throw PreconditionError(std::string("non-finite ") + kMetricNames[d] + " in corpus");
            model.means[d] += x[d];
        }
    }
    for (double& m : model.means) m /= n;
    for (const auto& v : corpus) {
        const auto x = v.as_array();
        for (std::size_t d = 0; d < 4; ++d) model.stddevs[d] += (x[d] - model.means[d]) * (x[d] - model.means[d]);
    }
    for (std::size_t d = 0; d < 4; ++d) {
        model.stddevs[d] = std::sqrt(model.stddevs[d] / n);
        if (!(model.stddevs[d] > 0.0)) throw DegenerateError(std::string("metric ") + kMetricNames[d] + " is constant over the corpus");
    }

    Matrix cov(4, 4);
    for (const auto& v : corpus) {
        const auto x = v.as_array();
        std::array<double, 4> z{};
        for (std::size_t d = 0; d < 4; ++d) z[d] = (x[d] - model.means[d]) / model.stddevs[d];
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) cov(a, b) += z[a] * z[b];
        }
    }
    for (double& c : cov.data()) c /= n;

    const SymmetricEigen eig = symmetric_eigen(cov);
    double total = 0.0;
    double sum = 0.0;
    for (std::size_t d = 0; d < 4; ++d) {
        model.eigenvalues[d] = eig.values[d];
        total += eig.values[d];
        model.loadings[d] = eig.vectors(d, 0);
    }
    double norm = 0.0;
    for (double l : model.loadings) norm += l * l;
    norm = std::sqrt(norm);
    for (double& l : model.loadings) {
        l /= norm;
        sum += l;
    }
    if (sum < 0.0) {
        for (double& l : model.loadings) l = -l;
        model.orientation_flipped = true;
    }
    model.explained_variance_ratio = total > 0.0 ? std::clamp(eig.values[0] / total, 0.0, 1.0) : 0.0;
    return model;
}

nlohmann::json UpcaModel::to_json() const {
    return {{"metrics", kMetricNames},
            {"means", means},
            {"stddevs", stddevs},
            {"loadings", loadings},
            {"eigenvalues", eigenvalues},
            {"explained_variance_ratio", explained_variance_ratio},
            {"orientation_flipped", orientation_flipped},
            {"fit", {{"corpus_size", corpus_size}, {"standardization", "population"}, {"orientation", "loading_sum_nonnegative"}}}};
}

UpcaModel UpcaModel::from_json(const nlohmann::json& j) {
    UpcaModel m;
    m.means = j.at("means").get<std::array<double, 4>>();
    m.stddevs = j.at("stddevs").get<std::array<double, 4>>();
    m.loadings = j.at("loadings").get<std::array<double, 4>>();
    if (j.contains("eigenvalues")) m.eigenvalues = j.at("eigenvalues").get<std::array<double, 4>>();
    m.explained_variance_ratio = j.at("explained_variance_ratio").get<double>();
    m.orientation_flipped = j.at("orientation_flipped").get<bool>();
    if (j.contains("fit")) m.corpus_size = j.at("fit").value("corpus_size", std::size_t{0});
    for (double s : m.stddevs) {
        if (!(s > 0.0)) throw ParseError("u_pca model has a non-positive standard deviation");
    }
    return m;
}

UpcaModel UpcaModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void UpcaModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model " + path.string());
    out << to_json().dump(2) << "\n";
}

}  // namespace synthval
