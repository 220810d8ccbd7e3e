#include <fstream>

#include <json.hpp>

#include "hac24/errors.hpp"
#include "hac24/lpa.hpp"

namespace hac24 {

using nlohmann::json;

void write_model_json(std::ostream& out, const MixtureModel& model) {
    json j;
    j["format"] = "hac24-mixture";
    j["version"] = kModelArtifactVersion;
    j["structure"] = to_string(model.structure);
    j["k"] = model.k();
    j["d"] = model.d();
    j["n"] = model.n;
    j["parameters"] = model.parameters;
    j["log_likelihood"] = model.log_likelihood;
    j["indicators"] = model.indicators;
    j["order_by"] = model.order_by;
    j["weights"] = model.weights;
    json profiles = json::array();
    for (const auto& p : model.profiles) {
        json cov = json::array();
        for (Eigen::Index r = 0; r < p.covariance.rows(); ++r) {
            std::vector<double> row(p.covariance.cols());
            for (Eigen::Index c = 0; c < p.covariance.cols(); ++c) row[static_cast<std::size_t>(c)] = p.covariance(r, c);
            cov.push_back(row);
        }
        profiles.push_back({{"mean", std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size())},
                            {"covariance", cov}});
    }
    j["profiles"] = profiles;
    out << j.dump(2) << '\n';
}

MixtureModel read_model_json(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("model artifact is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "hac24-mixture") throw DataError("not a mixture model artifact");
        const int version = j.at("version").get<int>();
        if (version != kModelArtifactVersion) {
            throw DataError("model artifact version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelArtifactVersion) + ")");
        }
        MixtureModel m;
        m.structure = parse_structure(j.at("structure").get<std::string>());
        m.n = j.at("n").get<Eigen::Index>();
        m.parameters = j.at("parameters").get<int>();
        m.log_likelihood = j.at("log_likelihood").get<double>();
        m.indicators = j.at("indicators").get<std::vector<std::string>>();
        m.order_by = j.at("order_by").get<int>();
        m.weights = j.at("weights").get<std::vector<double>>();
        const int d = j.at("d").get<int>();
        for (const auto& p : j.at("profiles")) {
            GaussianProfile g;
            const auto mean = p.at("mean").get<std::vector<double>>();
            const auto cov = p.at("covariance").get<std::vector<std::vector<double>>>();
            if (static_cast<int>(mean.size()) != d || static_cast<int>(cov.size()) != d) {
                throw DataError("profile dimensions do not match d");
            }
            g.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
            g.covariance.resize(d, d);
            for (int r = 0; r < d; ++r) {
                if (static_cast<int>(cov[static_cast<std::size_t>(r)].size()) != d) throw DataError("ragged covariance");
                for (int c = 0; c < d; ++c) g.covariance(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            m.profiles.push_back(std::move(g));
        }
        if (m.profiles.size() != m.weights.size() || m.k() != j.at("k").get<int>()) {
            throw DataError("profile and weight counts disagree");
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model artifact: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const MixtureModel& model) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write " + tmp.string());
        write_model_json(out, model);
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

MixtureModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_model_json(in);
}

}  // namespace hac24
