#include "dsm/errors.hpp"
#include "dsm/models.hpp"

namespace dsm {

const std::vector<std::string>& catalogue_names() {
    static const std::vector<std::string> names{"gaussian-kl", "gaussian-sumsq", "regression-ls", "regression-dlambda",
                                                "gce",         "vmf-sphere",     "vmf-cylinder",  "gumbel"};
    return names;
}

ModelDefinition make_model(const std::string& name, const CatalogueParams& p) {
    if (name == "gaussian-kl") return gaussian_kl();
    if (name == "gaussian-sumsq") return gaussian_sumsq(p.mu0, p.sigma0);
    if (name == "regression-ls") return regression_ls();
    if (name == "regression-dlambda") return regression_dlambda(p.lambda);
    if (name == "gce") return grand_canonical(p.levels);
    if (name == "vmf-sphere") return vmf_sphere(p.kappa);
    if (name == "vmf-cylinder") return vmf_cylinder(p.kappa);
    if (name == "gumbel") return gumbel();
    std::string known;
    for (const auto& n : catalogue_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model '" + name + "' (known: " + known + ")");
}

} // namespace dsm
