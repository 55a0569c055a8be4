#include "rfi/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "rfi/csv.hpp"
#include "rfi/errors.hpp"

namespace rfi {

namespace {

const std::vector<std::string> kDefaultTraits = {"dmi", "mbw", "milkne", "dbw"};

// Sort labels numerically when every label parses as an integer, otherwise
// lexicographically; either way level order is independent of row order.
std::vector<std::string> sorted_levels(const std::set<std::string>& labels) {
    std::vector<std::string> out(labels.begin(), labels.end());
    bool numeric = true;
    for (const auto& s : out) {
        if (s.empty() || s.find_first_not_of("0123456789-") != std::string::npos) {
            numeric = false;
            break;
        }
    }
    if (numeric) {
        std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
            return std::stol(a) < std::stol(b);
        });
    } else {
        std::sort(out.begin(), out.end());
    }
    return out;
}

}  // namespace

PhenotypeTable PhenotypeTable::from_csv(const std::string& path) {
    auto t = csv::read_file(path);
    PhenotypeTable out;
    out.trait_names = kDefaultTraits;
    int ca = t.column("animal"), cd = t.column("dim"), cw = t.column("test_week");
    if (ca < 0 || cd < 0 || cw < 0)
        throw ValidationError(path + ": phenotype header must contain animal,dim,test_week");
    std::vector<int> tc;
    for (const auto& name : out.trait_names) {
        int c = t.column(name);
        if (c < 0) throw ValidationError(path + ": missing trait column '" + name + "'");
        tc.push_back(c);
    }
    const int n = static_cast<int>(t.rows.size());
    if (n == 0) throw ValidationError(path + ": no phenotype records");
    out.traits.resize(n, static_cast<int>(tc.size()));
    std::unordered_set<std::string> seen;
    for (int i = 0; i < n; ++i) {
        const auto& r = t.rows[i];
        if (r[ca].empty()) throw ValidationError(path + ": empty animal id");
        if (!seen.insert(r[ca]).second)
            throw ValidationError(path + ": duplicate record for animal '" + r[ca] + "'");
        out.animal.push_back(r[ca]);
        out.dim.push_back(r[cd]);
        out.test_week.push_back(r[cw]);
        for (std::size_t j = 0; j < tc.size(); ++j) {
            double v = csv::to_double(r[tc[j]], path + " row " + std::to_string(i + 2));
            if (!std::isfinite(v))
                throw ValidationError(path + ": non-finite value for animal '" + r[ca] + "'");
            out.traits(i, static_cast<int>(j)) = v;
        }
    }
    return out;
}

void PhenotypeTable::to_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "animal,dim,test_week";
    for (const auto& name : trait_names) f << ',' << name;
    f << '\n';
    f.precision(10);
    for (int i = 0; i < n(); ++i) {
        f << animal[i] << ',' << dim[i] << ',' << test_week[i];
        for (int j = 0; j < k(); ++j) f << ',' << traits(i, j);
        f << '\n';
    }
}

PhenotypeTable standardize(const PhenotypeTable& table, Standardization* stats) {
    const int n = table.n(), k = table.k();
    if (n < 2) throw ValidationError("standardization needs at least two records");
    PhenotypeTable out = table;
    Standardization s;
    s.mean.resize(k);
    s.sd.resize(k);
    for (int j = 0; j < k; ++j) {
        double m = table.traits.col(j).mean();
        double ss = (table.traits.col(j).array() - m).square().sum();
        double sd = std::sqrt(ss / (n - 1));
        if (sd < 1e-12)
            throw ValidationError("trait '" + table.trait_names[j] + "' has zero variance");
        s.mean(j) = m;
        s.sd(j) = sd;
        out.traits.col(j) = (table.traits.col(j).array() - m) / sd;
    }
    if (stats) *stats = s;
    return out;
}

Design build_design(const PhenotypeTable& table, const Pedigree& pedigree) {
    Design d;
    const int n = table.n();
    std::set<std::string> dims(table.dim.begin(), table.dim.end());
    std::set<std::string> tws(table.test_week.begin(), table.test_week.end());
    d.dim_labels = sorted_levels(dims);
    d.tw_labels = sorted_levels(tws);

    std::unordered_map<std::string, int> dim_idx, tw_idx;
    for (int i = 0; i < d.n_dim(); ++i) dim_idx[d.dim_labels[i]] = i;
    for (int i = 0; i < d.n_tw(); ++i) tw_idx[d.tw_labels[i]] = i;

    d.records_by_dim.resize(d.n_dim());
    d.records_by_tw.resize(d.n_tw());
    d.records_by_animal.resize(pedigree.size());
    for (int i = 0; i < n; ++i) {
        int ai = pedigree.find(table.animal[i]);
        if (ai < 0)
            throw ValidationError("animal '" + table.animal[i] + "' has phenotypes but no pedigree entry");
        d.animal.push_back(ai);
        d.dim_level.push_back(dim_idx.at(table.dim[i]));
        d.tw_level.push_back(tw_idx.at(table.test_week[i]));
        d.records_by_dim[d.dim_level.back()].push_back(i);
        d.records_by_tw[d.tw_level.back()].push_back(i);
        d.records_by_animal[ai].push_back(i);
    }
    return d;
}

}  // namespace rfi
