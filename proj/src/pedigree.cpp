#include "rfi/pedigree.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "rfi/csv.hpp"
#include "rfi/errors.hpp"

namespace rfi {

namespace {

struct RawEntry {
    std::string id, sire, dam;
};

}  // namespace

Pedigree Pedigree::from_records(const std::vector<std::array<std::string, 3>>& records) {
    std::vector<RawEntry> raw;
    raw.reserve(records.size());
    std::unordered_map<std::string, int> pos;
    for (const auto& r : records) {
        if (r[0].empty() || r[0] == "0")
            throw ValidationError("pedigree: animal id missing or '0'");
        if (!pos.emplace(r[0], static_cast<int>(raw.size())).second)
            throw ValidationError("pedigree: duplicate animal id '" + r[0] + "'");
        raw.push_back({r[0], r[1], r[2]});
    }
    for (const auto& e : raw) {
        for (const std::string* p : {&e.sire, &e.dam}) {
            if (*p != "0" && !p->empty() && !pos.count(*p))
                throw ValidationError("pedigree: parent '" + *p + "' of '" + e.id +
                                      "' has no own record");
        }
        if (e.sire == e.id || e.dam == e.id)
            throw ValidationError("pedigree: animal '" + e.id + "' is its own parent");
    }

    // Depth-first topological sort; a cycle means some animal is its own ancestor.
    const int n = static_cast<int>(raw.size());
    std::vector<int> state(n, 0), order, stack;
    order.reserve(n);
    auto parents_of = [&](int v) {
        std::array<int, 2> p{-1, -1};
        if (raw[v].sire != "0" && !raw[v].sire.empty()) p[0] = pos.at(raw[v].sire);
        if (raw[v].dam != "0" && !raw[v].dam.empty()) p[1] = pos.at(raw[v].dam);
        return p;
    };
    for (int start = 0; start < n; ++start) {
        if (state[start] != 0) continue;
        stack.push_back(start);
        while (!stack.empty()) {
            int v = stack.back();
            if (state[v] == 0) {
                state[v] = 1;
                for (int pi : parents_of(v)) {
                    if (pi < 0) continue;
                    if (state[pi] == 1)
                        throw ValidationError("pedigree: cycle involving '" + raw[pi].id + "'");
                    if (state[pi] == 0) stack.push_back(pi);
                }
            } else {
                if (state[v] == 1) {
                    state[v] = 2;
                    order.push_back(v);
                }
                stack.pop_back();
            }
        }
    }

    Pedigree ped;
    std::vector<int> new_index(n, -1);
    for (int rank = 0; rank < n; ++rank) new_index[order[rank]] = rank;
    ped.ids_.resize(n);
    ped.sire_.resize(n);
    ped.dam_.resize(n);
    for (int old = 0; old < n; ++old) {
        int ni = new_index[old];
        ped.ids_[ni] = raw[old].id;
        auto parent = [&](const std::string& label) {
            return (label == "0" || label.empty()) ? -1 : new_index[pos.at(label)];
        };
        ped.sire_[ni] = parent(raw[old].sire);
        ped.dam_[ni] = parent(raw[old].dam);
        ped.index_[raw[old].id] = ni;
    }
    ped.finalize();
    return ped;
}

Pedigree Pedigree::from_csv(const std::string& path) {
    auto t = csv::read_file(path);
    int ci = t.column("animal"), cs = t.column("sire"), cd = t.column("dam");
    if (ci < 0 || cs < 0 || cd < 0)
        throw ValidationError(path + ": pedigree header must contain animal,sire,dam");
    std::vector<std::array<std::string, 3>> records;
    records.reserve(t.rows.size());
    for (const auto& r : t.rows) records.push_back({r[ci], r[cs], r[cd]});
    return from_records(records);
}

int Pedigree::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

void Pedigree::finalize() {
    const int n = size();
    inbreeding_.assign(n, 0.0);
    mendelian_var_.assign(n, 1.0);

    // Meuwissen-Luo style accumulation: the diagonal element A_ii equals the
    // sum over ancestors j of (path weight)^2 * d_j, with weights halving per
    // generation and merged across paths before squaring.
    std::map<int, double, std::greater<int>> weights;
    for (int i = 0; i < n; ++i) {
        int s = sire_[i], d = dam_[i];
        if (s >= 0 && d >= 0)
            mendelian_var_[i] = 0.5 - 0.25 * (inbreeding_[s] + inbreeding_[d]);
        else if (s >= 0 || d >= 0)
            mendelian_var_[i] = 0.75 - 0.25 * inbreeding_[s >= 0 ? s : d];
        else
            mendelian_var_[i] = 1.0;

        if (s < 0 || d < 0) {
            inbreeding_[i] = 0.0;
            continue;
        }
        weights.clear();
        weights[i] = 1.0;
        double a_ii = 0.0;
        while (!weights.empty()) {
            auto it = weights.begin();
            int j = it->first;
            double w = it->second;
            weights.erase(it);
            a_ii += w * w * mendelian_var_[j];
            if (sire_[j] >= 0) weights[sire_[j]] += 0.5 * w;
            if (dam_[j] >= 0) weights[dam_[j]] += 0.5 * w;
        }
        inbreeding_[i] = a_ii - 1.0;
    }
}

Eigen::MatrixXd Pedigree::numerator_matrix() const {
    const int n = size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        int s = sire_[i], d = dam_[i];
        for (int j = 0; j < i; ++j) {
            double v = 0.0;
            if (s >= 0) v += 0.5 * A(j, s);
            if (d >= 0) v += 0.5 * A(j, d);
            A(i, j) = A(j, i) = v;
        }
        A(i, i) = 1.0 + (s >= 0 && d >= 0 ? 0.5 * A(s, d) : 0.0);
    }
    return A;
}

Eigen::SparseMatrix<double> Pedigree::inverse_numerator_matrix() const {
    const int n = size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 9);
    for (int i = 0; i < n; ++i) {
        double alpha = 1.0 / mendelian_var_[i];
        trips.emplace_back(i, i, alpha);
        for (int p : {sire_[i], dam_[i]}) {
            if (p < 0) continue;
            trips.emplace_back(i, p, -0.5 * alpha);
            trips.emplace_back(p, i, -0.5 * alpha);
            trips.emplace_back(p, p, 0.25 * alpha);
        }
        if (sire_[i] >= 0 && dam_[i] >= 0) {
            trips.emplace_back(sire_[i], dam_[i], 0.25 * alpha);
            trips.emplace_back(dam_[i], sire_[i], 0.25 * alpha);
        }
    }
    Eigen::SparseMatrix<double> Ainv(n, n);
    Ainv.setFromTriplets(trips.begin(), trips.end());
    Ainv.makeCompressed();
    return Ainv;
}

}  // namespace rfi
