#include "decohist/decoherence.hpp"

#include <map>
#include <string>
#include <utility>

namespace decohist {

namespace {

Complex pair_entry(const Matrix& branch_a, const Matrix& branch_b) {
    // Tr(B_b' B_a) where ' is the adjoint, without forming the product
    return branch_b.conjugate().cwiseProduct(branch_a).sum();
}

} // namespace

DecoherenceReport report_from_branches(std::vector<HistoryLabel> labels,
                                       const std::vector<Matrix>& branches, double epsilon) {
    if (labels.size() != branches.size())
        throw contract_violation("decoherence: labels and branches differ in count");
    const Index n = static_cast<Index>(branches.size());
    DecoherenceReport report;
    report.labels  = std::move(labels);
    report.epsilon = epsilon;
    report.gram.resize(n, n);
    report.probabilities.resize(n);

    for (Index a = 0; a < n; ++a) {
        report.probabilities(a) = branches[static_cast<std::size_t>(a)].squaredNorm();
        report.gram(a, a)       = report.probabilities(a);
        for (Index b = 0; b < a; ++b) {
            const Complex d = pair_entry(branches[static_cast<std::size_t>(a)],
                                         branches[static_cast<std::size_t>(b)]);
            report.gram(a, b) = d;
            report.gram(b, a) = std::conj(d);
        }
    }

    const double total = report.probabilities.sum();
    if (std::abs(total - 1.0) > 1e-9)
        throw numerical_failure("decoherence: retained probabilities sum to " +
                                std::to_string(total) +
                                "; the set is not exhaustive or pruning was too aggressive");

    double defect = 0.0;
    for (Index a = 0; a < n; ++a) {
        if (report.probabilities(a) == 0.0) continue;
        for (Index b = 0; b < a; ++b) {
            if (report.probabilities(b) == 0.0) continue;
            const double scale =
                std::sqrt(report.probabilities(a) * report.probabilities(b));
            defect = std::max(defect, std::abs(report.gram(a, b)) /
                                          std::max(scale, defect_floor));
        }
    }
    report.defect     = defect;
    report.decoherent = defect <= epsilon;
    return report;
}

DecoherenceReport decoherence_functional(const HistorySet& set, const DensityMatrix& rho,
                                         double epsilon, double prune_tol) {
    if (rho.dim() != set.dim())
        throw contract_violation("decoherence: state dimension differs from the history set");
    const Matrix w = rho.factor();
    std::vector<HistoryLabel> labels;
    std::vector<Matrix> branches;
    set.for_each_branch(w, prune_tol, [&](const HistoryLabel& l, const Matrix& b) {
        labels.push_back(l);
        branches.push_back(b);
    });
    return report_from_branches(std::move(labels), branches, epsilon);
}

DecoherenceReport decoherence_functional(const std::vector<Matrix>& class_ops,
                                         const DensityMatrix& rho, double epsilon) {
    if (class_ops.empty())
        throw contract_violation("decoherence: no class operators given");
    const Matrix w = rho.factor();
    std::vector<HistoryLabel> labels;
    std::vector<Matrix> branches;
    labels.reserve(class_ops.size());
    branches.reserve(class_ops.size());
    for (std::size_t k = 0; k < class_ops.size(); ++k) {
        if (class_ops[k].rows() != rho.dim() || class_ops[k].cols() != rho.dim())
            throw contract_violation("decoherence: class operator " + std::to_string(k) +
                                     " has the wrong shape");
        labels.push_back({static_cast<Index>(k)});
        branches.emplace_back(class_ops[k] * w);
    }
    return report_from_branches(std::move(labels), branches, epsilon);
}

Verdict check_medium_decoherence(const DecoherenceReport& report, double epsilon) {
    if (!(epsilon > 0.0))
        throw contract_violation("decoherence: tolerance must be positive");
    return report.defect <= epsilon ? Verdict::decoherent : Verdict::not_decoherent;
}

double sum_rule_audit(const DecoherenceReport& fine, const CoarseGrainingMap& map,
                      const DecoherenceReport& coarse,
                      const std::vector<HistoryLabel>& class_to_label) {
    const std::size_t n_classes = map.classes.size();
    std::map<HistoryLabel, std::size_t> class_of;
    for (std::size_t k = 0; k < n_classes; ++k)
        for (const auto& l : map.classes[k]) class_of[l] = k;

    std::vector<double> fine_sum(n_classes, 0.0);
    for (std::size_t j = 0; j < fine.labels.size(); ++j) {
        auto it = class_of.find(fine.labels[j]);
        if (it == class_of.end())
            throw contract_violation(
                "decoherence: fine history is missing from the partition");
        fine_sum[it->second] += fine.probabilities(static_cast<Index>(j));
    }

    std::map<HistoryLabel, std::size_t> class_of_coarse;
    for (std::size_t k = 0; k < class_to_label.size(); ++k)
        class_of_coarse[class_to_label[k]] = k;

    std::vector<double> coarse_p(n_classes, 0.0);
    for (std::size_t j = 0; j < coarse.labels.size(); ++j) {
        std::size_t k = 0;
        if (class_to_label.empty()) {
            const HistoryLabel& l = coarse.labels[j];
            if (l.size() != 1 || l.front() < 0 ||
                static_cast<std::size_t>(l.front()) >= n_classes)
                throw contract_violation(
                    "decoherence: coarse report does not match the partition");
            k = static_cast<std::size_t>(l.front());
        } else {
            auto it = class_of_coarse.find(coarse.labels[j]);
            if (it == class_of_coarse.end())
                throw contract_violation(
                    "decoherence: coarse history is missing from class_to_label");
            k = it->second;
        }
        coarse_p[k] = coarse.probabilities(static_cast<Index>(j));
    }

    double violation = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k)
        violation = std::max(violation, std::abs(coarse_p[k] - fine_sum[k]));
    return violation;
}

double effective_density_check(const HistorySet& set, const DensityMatrix& rho,
                               const DensityMatrix& rho_tilde, double prune_tol) {
    if (rho.dim() != set.dim() || rho_tilde.dim() != set.dim())
        throw contract_violation("decoherence: state dimension differs from the history set");
    const Matrix w1 = rho.factor();
    const Matrix w2 = rho_tilde.factor();
    Matrix seed(set.dim(), w1.cols() + w2.cols());
    seed << w1, w2;

    std::vector<Matrix> b1, b2;
    set.for_each_branch(seed, prune_tol, [&](const HistoryLabel&, const Matrix& b) {
        b1.emplace_back(b.leftCols(w1.cols()));
        b2.emplace_back(b.rightCols(w2.cols()));
    });

    double gap = 0.0;
    for (std::size_t a = 0; a < b1.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b)
            gap = std::max(gap, std::abs(pair_entry(b1[a], b1[b]) - pair_entry(b2[a], b2[b])));
    return gap;
}

} // namespace decohist
