#include "fedmia/attacks.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "fedmia/errors.hpp"
#include "fedmia/serialize.hpp"

namespace fedmia {

std::string_view to_string(RowSource s) {
    switch (s) {
    case RowSource::shadow_member: return "D_m";
    case RowSource::shadow_nonmember: return "D_nm";
    case RowSource::attribute_shadow: return "D_s";
    case RowSource::target: return "target";
    }
    return "target";
}

RowSource parse_row_source(std::string_view s) {
    if (s == "D_m") return RowSource::shadow_member;
    if (s == "D_nm") return RowSource::shadow_nonmember;
    if (s == "D_s") return RowSource::attribute_shadow;
    if (s == "target") return RowSource::target;
    throw InputError("unknown row source '" + std::string(s) + "'");
}

std::string_view to_string(AttackKind k) {
    return k == AttackKind::logistic_regression ? "logistic_regression" : "mlp_64";
}

AttackKind parse_attack_kind(std::string_view s) {
    if (s == "logistic_regression" || s == "logistic") return AttackKind::logistic_regression;
    if (s == "mlp_64") return AttackKind::mlp_64;
    throw ConfigError("unknown attack classifier '" + std::string(s) + "'");
}

Matrix AttackDataset::feature_matrix() const {
    Matrix m(rows.size(), width());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].features.size() != width()) throw ShapeError("attack row has wrong width");
        std::copy(rows[r].features.begin(), rows[r].features.end(), m.row(r).begin());
    }
    return m;
}

std::vector<int> AttackDataset::labels() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
}

namespace {

void check_disjoint(const LabeledDataset& a, const LabeledDataset& b) {
    const std::set<RecordId> ids(a.ids.begin(), a.ids.end());
    for (RecordId id : b.ids)
        if (ids.count(id) != 0)
            throw DatasetError("record " + std::to_string(id) + " is both a member and a non-member");
}

void warn_if_degenerate(const LabeledDataset& members, const LabeledDataset& non_members) {
    if (members.empty() || non_members.empty())
        std::clog << "warning: attack dataset has a single membership class (" << members.size() << " members, "
                  << non_members.size() << " non-members)\n";
}

} // namespace

AttackDataset build_membership_dataset(std::span<const ModelSnapshot> shadow_snapshots, const LabeledDataset& members,
                                       const LabeledDataset& non_members, SignalKind kind, GradientScope scope) {
    if (shadow_snapshots.empty()) throw ConfigError("attack dataset needs at least one shadow snapshot");
    check_disjoint(members, non_members);
    warn_if_degenerate(members, non_members);

    AttackDataset c{shadow_snapshots.size(), 1, kind, {}};
    c.rows.reserve(members.size() + non_members.size());
    auto add = [&](const LabeledDataset& ds, RowSource source, int label) {
        for (std::size_t r = 0; r < ds.size(); ++r) {
            auto series = extract_series(shadow_snapshots, ds.ids[r], ds.features.row(r), ds.labels[r], kind, scope);
            c.rows.push_back({ds.ids[r], source, label, std::move(series.values)});
        }
    };
    add(members, RowSource::shadow_member, 1);
    add(non_members, RowSource::shadow_nonmember, 0);
    return c;
}

AttackDataset build_membership_dataset_by_round(std::span<const ModelSnapshot> shadow_snapshots,
                                                const LabeledDataset& members, const LabeledDataset& non_members,
                                                SignalKind kind, std::span<const std::vector<std::size_t>> round_orders,
                                                GradientScope scope) {
    if (shadow_snapshots.empty()) throw ConfigError("attack dataset needs at least one shadow snapshot");
    if (round_orders.size() != shadow_snapshots.size()) throw ShapeError("need one record order per round");
    check_disjoint(members, non_members);
    warn_if_degenerate(members, non_members);

    const std::size_t total = members.size() + non_members.size();
    const std::size_t n = shadow_snapshots.size();
    AttackDataset c{n, 1, kind, {}};
    c.rows.reserve(total);
    for (std::size_t r = 0; r < members.size(); ++r)
        c.rows.push_back({members.ids[r], RowSource::shadow_member, 1, std::vector<double>(n)});
    for (std::size_t r = 0; r < non_members.size(); ++r)
        c.rows.push_back({non_members.ids[r], RowSource::shadow_nonmember, 0, std::vector<double>(n)});

    for (std::size_t round = 0; round < n; ++round) {
        const auto& order = round_orders[round];
        std::vector<bool> seen(total, false);
        if (order.size() != total) throw ShapeError("record order is not a permutation");
        for (std::size_t idx : order) {
            if (idx >= total || seen[idx]) throw ShapeError("record order is not a permutation");
            seen[idx] = true;
            const bool member = idx < members.size();
            const LabeledDataset& ds = member ? members : non_members;
            const std::size_t r = member ? idx : idx - members.size();
            c.rows[idx].features[round] =
                signal(shadow_snapshots[round].model(), ds.features.row(r), ds.labels[r], kind, scope);
        }
    }
    return c;
}

std::vector<double> attribute_features(std::span<const ModelSnapshot> snapshots, std::span<const double> x, int y,
                                       std::size_t attribute_column, std::size_t k_values, SignalKind kind,
                                       GradientScope scope) {
    if (k_values < 2) throw ConfigError("attribute inference needs K >= 2");
    if (attribute_column >= x.size()) throw ShapeError("attribute column out of range");
    if (snapshots.empty()) throw ConfigError("attribute features need at least one snapshot");
    std::vector<double> hypo(x.begin(), x.end());
    std::vector<double> out;
    out.reserve(k_values * snapshots.size());
    for (std::size_t k = 0; k < k_values; ++k) {
        hypo[attribute_column] = static_cast<double>(k);
        for (const auto& snap : snapshots) out.push_back(signal(snap.model(), hypo, y, kind, scope));
    }
    return out;
}

namespace {

int attribute_value(const LabeledDataset& ds, std::size_t r, std::size_t k_values) {
    const double z = ds.features(r, *ds.attribute_column);
    if (z < 0.0 || z != std::floor(z) || z >= static_cast<double>(k_values))
        throw DatasetError("record " + std::to_string(ds.ids[r]) + " has attribute value outside [0, K)");
    return static_cast<int>(z);
}

} // namespace

AttackDataset build_attribute_dataset(std::span<const ModelSnapshot> shadow_snapshots, const LabeledDataset& shadow_set,
                                      std::size_t k_values, SignalKind kind, GradientScope scope) {
    if (k_values < 2) throw ConfigError("attribute inference needs K >= 2");
    if (!shadow_set.attribute_column) throw ConfigError("shadow set has no designated attribute column");
    AttackDataset c{shadow_snapshots.size(), k_values, kind, {}};
    c.rows.reserve(shadow_set.size());
    for (std::size_t r = 0; r < shadow_set.size(); ++r) {
        const int z = attribute_value(shadow_set, r, k_values);
        c.rows.push_back({shadow_set.ids[r], RowSource::attribute_shadow, z,
                          attribute_features(shadow_snapshots, shadow_set.features.row(r), shadow_set.labels[r],
                                             *shadow_set.attribute_column, k_values, kind, scope)});
    }
    return c;
}

std::vector<AlignmentMismatch> verify_row_alignment(const AttackDataset& dataset,
                                                    std::span<const ModelSnapshot> snapshots,
                                                    std::span<const LabeledDataset* const> sources,
                                                    GradientScope scope) {
    if (snapshots.size() != dataset.n_rounds) throw ShapeError("snapshot count differs from attack dataset rounds");
    std::vector<AlignmentMismatch> bad;
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        const AttackRow& row = dataset.rows[r];
        const LabeledDataset* src = nullptr;
        std::size_t idx = 0;
        for (const LabeledDataset* ds : sources) {
            if (const auto found = ds->find(row.record_id)) {
                src = ds;
                idx = *found;
                break;
            }
        }
        if (src == nullptr) throw DatasetError("record " + std::to_string(row.record_id) + " not found in sources");
        if (row.features.size() != dataset.width()) {
            bad.push_back({r, 0});
            continue;
        }
        std::vector<double> x(src->features.row(idx).begin(), src->features.row(idx).end());
        for (std::size_t b = 0; b < dataset.blocks; ++b) {
            if (dataset.blocks > 1) {
                if (!src->attribute_column) throw DatasetError("attribute rows need an attribute column");
                x[*src->attribute_column] = static_cast<double>(b);
            }
            for (std::size_t j = 0; j < dataset.n_rounds; ++j) {
                const double expected = signal(snapshots[j].model(), x, src->labels[idx], dataset.kind, scope);
                const std::size_t col = b * dataset.n_rounds + j;
                if (row.features[col] != expected) bad.push_back({r, col});
            }
        }
    }
    return bad;
}

void write_attack_csv(const std::filesystem::path& path, const AttackDataset& dataset) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "record_id,source,label";
    for (std::size_t i = 1; i <= dataset.width(); ++i) out << ",f_" << i;
    out << '\n' << std::setprecision(17);
    for (const auto& row : dataset.rows) {
        out << row.record_id << ',' << to_string(row.source) << ',' << row.label;
        for (double v : row.features) out << ',' << v;
        out << '\n';
    }
}

AttackDataset read_attack_csv(const std::filesystem::path& path, std::size_t n_rounds, SignalKind kind) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    const auto header_cells = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (header_cells < 4) throw ParseError("attack CSV needs at least one feature column", 1);
    const std::size_t width = header_cells - 3;
    if (n_rounds == 0 || width % n_rounds != 0) throw ShapeError("feature count is not a multiple of n_rounds");

    AttackDataset c{n_rounds, width / n_rounds, kind, {}};
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header_cells) throw ParseError("ragged row", row_no);
        AttackRow row;
        try {
            row.record_id = std::stoll(cells[0]);
            row.source = parse_row_source(cells[1]);
            row.label = std::stoi(cells[2]);
        } catch (const std::logic_error&) {
            throw ParseError("unparsable row prefix", row_no);
        }
        for (std::size_t i = 3; i < cells.size(); ++i) {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (end == cells[i].c_str() || *end != '\0' || errno == ERANGE)
                throw ParseError("unparsable feature '" + cells[i] + "'", row_no);
            row.features.push_back(v);
        }
        c.rows.push_back(std::move(row));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Attack classifiers

AttackModel AttackModel::zero_logistic(std::size_t width, std::size_t classes) {
    AttackModel m;
    m.kind = AttackKind::logistic_regression;
    m.num_classes = classes;
    m.input_width = width;
    m.feature_mean.assign(width, 0.0);
    m.feature_scale.assign(width, 1.0);
    const std::size_t rows = classes == 2 ? 1 : classes;
    m.coef = Matrix(rows, width);
    m.intercept.assign(rows, 0.0);
    return m;
}

std::vector<double> AttackModel::standardized(std::span<const double> features) const {
    if (features.size() != input_width)
        throw ShapeError("attack input has width " + std::to_string(features.size()) + ", expected " +
                         std::to_string(input_width));
    std::vector<double> z(features.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (features[i] - feature_mean[i]) / feature_scale[i];
    return z;
}

namespace {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// Class probabilities of a logistic model on an already standardized input.
void logistic_proba(const Matrix& coef, std::span<const double> intercept, std::span<const double> z,
                    std::span<double> out) {
    if (coef.rows == 1) {
        double t = intercept[0];
        for (std::size_t i = 0; i < z.size(); ++i) t += coef(0, i) * z[i];
        out[1] = sigmoid(t);
        out[0] = 1.0 - out[1];
        return;
    }
    double mx = -INFINITY;
    for (std::size_t k = 0; k < coef.rows; ++k) {
        double t = intercept[k];
        for (std::size_t i = 0; i < z.size(); ++i) t += coef(k, i) * z[i];
        out[k] = t;
        mx = std::max(mx, t);
    }
    double sum = 0.0;
    for (double& v : out) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : out) v /= sum;
}

struct LogisticFit {
    Matrix coef;
    std::vector<double> intercept;
    int iterations = 0;
    double gradient_norm = 0.0;
};

// Largest eigenvalue of Z~^T Z~ / N where Z~ = [Z, 1], by power iteration,
// capped by the trace.
double gram_spectral_bound(const Matrix& z) {
    const std::size_t d = z.cols + 1;
    const double inv_n = 1.0 / static_cast<double>(z.rows);
    double trace = 1.0;
    for (double v : z.data) trace += v * v * inv_n;
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), w(d);
    double lambda = trace;
    for (int it = 0; it < 100; ++it) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t r = 0; r < z.rows; ++r) {
            const auto row = z.row(r);
            double t = v[d - 1];
            for (std::size_t i = 0; i + 1 < d; ++i) t += row[i] * v[i];
            for (std::size_t i = 0; i + 1 < d; ++i) w[i] += row[i] * t * inv_n;
            w[d - 1] += t * inv_n;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        lambda = norm;
        for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / norm;
    }
    return std::min(trace, 1.1 * lambda);
}

// Regularized maximum likelihood by Nesterov-accelerated full-batch gradient
// descent with step 1/L. Objective: mean NLL + l2/2 |coef|^2 (intercept free).
LogisticFit fit_logistic(const Matrix& z, std::span<const int> labels, std::size_t classes, const FitOptions& opt) {
    const std::size_t n = z.rows, d = z.cols;
    const std::size_t rows = classes == 2 ? 1 : classes;
    const double curvature = classes == 2 ? 0.25 : 0.5;
    const double lipschitz = curvature * gram_spectral_bound(z) + opt.l2;
    const double step = 1.0 / lipschitz;
    const double mu = opt.l2;
    const double momentum =
        mu > 0.0 ? (std::sqrt(lipschitz) - std::sqrt(mu)) / (std::sqrt(lipschitz) + std::sqrt(mu)) : 0.9;

    const std::size_t p = rows * (d + 1);  // coefficients then intercepts
    std::vector<double> theta(p, 0.0), prev(p, 0.0), look(p), grad(p), proba(classes);
    const double inv_n = 1.0 / static_cast<double>(n);

    auto gradient = [&](const std::vector<double>& th) {
        std::fill(grad.begin(), grad.end(), 0.0);
        Matrix coef(rows, d);
        std::copy(th.begin(), th.begin() + static_cast<std::ptrdiff_t>(rows * d), coef.data.begin());
        std::span<const double> icpt(th.data() + rows * d, rows);
        for (std::size_t r = 0; r < n; ++r) {
            const auto x = z.row(r);
            logistic_proba(coef, icpt, x, proba);
            for (std::size_t k = 0; k < rows; ++k) {
                const std::size_t cls = rows == 1 ? 1 : k;
                const double resid = (proba[cls] - (labels[r] == static_cast<int>(cls) ? 1.0 : 0.0)) * inv_n;
                double* g = grad.data() + k * d;
                for (std::size_t i = 0; i < d; ++i) g[i] += resid * x[i];
                grad[rows * d + k] += resid;
            }
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < rows * d; ++i) grad[i] += opt.l2 * th[i];
        for (double g : grad) sq += g * g;
        return std::sqrt(sq);
    };

    LogisticFit fit;
    for (int it = 0; it < opt.max_iterations; ++it) {
        for (std::size_t i = 0; i < p; ++i) look[i] = theta[i] + momentum * (theta[i] - prev[i]);
        fit.gradient_norm = gradient(look);
        fit.iterations = it + 1;
        if (!std::isfinite(fit.gradient_norm)) throw NumericError("logistic regression diverged");
        prev = theta;
        if (fit.gradient_norm <= opt.tolerance) {
            theta = look;
            break;
        }
        for (std::size_t i = 0; i < p; ++i) theta[i] = look[i] - step * grad[i];
    }
    fit.coef = Matrix(rows, d);
    std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(rows * d), fit.coef.data.begin());
    fit.intercept.assign(theta.begin() + static_cast<std::ptrdiff_t>(rows * d), theta.end());
    return fit;
}

} // namespace

std::vector<double> AttackModel::predict_proba(std::span<const double> features) const {
    const auto z = standardized(features);
    std::vector<double> out(num_classes);
    if (kind == AttackKind::logistic_regression) {
        logistic_proba(coef, intercept, z, out);
    } else {
        out = fedmia::predict(*net, z);
    }
    return out;
}

namespace {

int decide(std::span<const double> p, double threshold) {
    if (p.size() == 2) return p[1] > threshold ? 1 : 0;
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k)
        if (p[k] > p[best]) best = k;
    return static_cast<int>(best);
}

} // namespace

int AttackModel::predict(std::span<const double> features) const { return decide(predict_proba(features), threshold); }

AttackModel fit_attack_model(const AttackDataset& dataset, AttackKind kind, const FitOptions& options) {
    if (dataset.rows.empty()) throw FitError("attack dataset is empty");
    const auto labels = dataset.labels();
    const std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw FitError("attack dataset contains a single class");
    if (*distinct.begin() < 0) throw FitError("negative attack label");
    const std::size_t classes = std::max<std::size_t>(2, static_cast<std::size_t>(*distinct.rbegin()) + 1);

    Matrix x = dataset.feature_matrix();
    const std::size_t n = x.rows, d = x.cols;
    AttackModel m;
    m.kind = kind;
    m.num_classes = classes;
    m.input_width = d;
    m.feature_mean.assign(d, 0.0);
    m.feature_scale.assign(d, 1.0);
    const bool standardize = options.standardize.value_or(kind == AttackKind::logistic_regression);
    if (standardize) {
        for (std::size_t c = 0; c < d; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
            const double sd = std::sqrt(var / static_cast<double>(n));
            m.feature_mean[c] = mean;
            m.feature_scale[c] = sd > 0.0 ? sd : 1.0;
        }
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) x(r, c) = (x(r, c) - m.feature_mean[c]) / m.feature_scale[c];
    }

    if (kind == AttackKind::logistic_regression) {
        auto fit = fit_logistic(x, labels, classes, options);
        m.coef = std::move(fit.coef);
        m.intercept = std::move(fit.intercept);
        m.iterations = fit.iterations;
        m.final_gradient_norm = fit.gradient_norm;
    } else {
        Rng rng(derive_seed(options.seed, "attack-mlp"));
        const std::size_t widths[] = {d, 64, classes};
        MlpModel net = MlpModel::create(widths, Activation::relu, LossKind::softmax_cross_entropy, rng);
        TrainOptions train{options.mlp_epochs, options.mlp_batch_size, AdamHyper{}};
        train.adam.learning_rate = options.mlp_learning_rate;
        const auto stats = train_local(net, x, labels, train, rng);
        m.iterations = static_cast<int>(stats.steps);
        m.net = std::move(net);
    }
    return m;
}

nlohmann::json attack_model_to_json(const AttackModel& model) {
    auto enc = [](std::span<const double> v) {
        auto a = nlohmann::json::array();
        for (double x : v) a.push_back(encode_double(x));
        return a;
    };
    nlohmann::json doc{{"format", "fedmia-attack"},
                       {"version", 1},
                       {"kind", std::string(to_string(model.kind))},
                       {"num_classes", model.num_classes},
                       {"input_width", model.input_width},
                       {"feature_mean", enc(model.feature_mean)},
                       {"feature_scale", enc(model.feature_scale)},
                       {"threshold", encode_double(model.threshold)}};
    if (model.kind == AttackKind::logistic_regression) {
        doc["coef_rows"] = model.coef.rows;
        doc["coef"] = enc(model.coef.data);
        doc["intercept"] = enc(model.intercept);
    } else {
        doc["net"] = model_to_json(*model.net);
    }
    return doc;
}

AttackModel attack_model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "fedmia-attack") throw InputError("not an attack model checkpoint");
        auto dec = [](const nlohmann::json& a) {
            std::vector<double> v;
            for (const auto& x : a) v.push_back(decode_double(x.get<std::string>()));
            return v;
        };
        AttackModel m;
        m.kind = parse_attack_kind(doc.at("kind").get<std::string>());
        m.num_classes = doc.at("num_classes").get<std::size_t>();
        m.input_width = doc.at("input_width").get<std::size_t>();
        m.feature_mean = dec(doc.at("feature_mean"));
        m.feature_scale = dec(doc.at("feature_scale"));
        m.threshold = decode_double(doc.at("threshold").get<std::string>());
        if (m.feature_mean.size() != m.input_width || m.feature_scale.size() != m.input_width)
            throw ShapeError("standardization width mismatch");
        if (m.kind == AttackKind::logistic_regression) {
            const auto rows = doc.at("coef_rows").get<std::size_t>();
            m.coef = Matrix(rows, m.input_width);
            m.coef.data = dec(doc.at("coef"));
            m.intercept = dec(doc.at("intercept"));
            if (m.coef.data.size() != rows * m.input_width || m.intercept.size() != rows)
                throw ShapeError("logistic parameter shape mismatch");
        } else {
            m.net = model_from_json(doc.at("net"));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed attack checkpoint: ") + e.what());
    }
}

std::vector<double> infer_membership(const AttackModel& attack, std::span<const ModelSnapshot> target_snapshots,
                                     const LabeledDataset& records, SignalKind kind, GradientScope scope) {
    if (target_snapshots.size() != attack.input_width)
        throw ShapeError("attack expects " + std::to_string(attack.input_width) + " rounds, got " +
                         std::to_string(target_snapshots.size()));
    std::vector<double> probs;
    probs.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto s = extract_series(target_snapshots, records.ids[r], records.features.row(r), records.labels[r],
                                      kind, scope);
        probs.push_back(attack.predict_proba(s.values)[1]);
    }
    return probs;
}

AttributeInference infer_attribute(const AttackModel& attack, std::span<const ModelSnapshot> target_snapshots,
                                   const LabeledDataset& records, std::size_t k_values, SignalKind kind,
                                   GradientScope scope) {
    if (!records.attribute_column) throw ConfigError("records have no designated attribute column");
    if (attack.num_classes != k_values || attack.input_width != k_values * target_snapshots.size())
        throw ShapeError("attack model was trained for a different K or round count");
    AttributeInference out;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto f = attribute_features(target_snapshots, records.features.row(r), records.labels[r],
                                          *records.attribute_column, k_values, kind, scope);
        out.probabilities.push_back(attack.predict_proba(f));
        out.predicted.push_back(decide(out.probabilities.back(), attack.threshold));
    }
    return out;
}

} // namespace fedmia
