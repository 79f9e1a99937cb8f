#pragma once

#include "dsm/model.hpp"

#include <string>
#include <vector>

namespace dsm {

ModelDefinition gaussian_kl();
ModelDefinition gaussian_sumsq(double mu0, double sigma0);
ModelDefinition regression_ls();
ModelDefinition regression_dlambda(double lambda);
ModelDefinition grand_canonical(std::vector<double> levels);
ModelDefinition vmf_sphere(double kappa);
ModelDefinition vmf_cylinder(double kappa);
ModelDefinition gumbel();

struct CatalogueParams {
    std::vector<double> levels{1.0, 2.0, 3.0};
    double kappa = 2.0;
    double lambda = 2.0;
    double mu0 = 1.0;
    double sigma0 = 1.0;
};

const std::vector<std::string>& catalogue_names();
/// Throws ConfigError for an unknown name.
ModelDefinition make_model(const std::string& name, const CatalogueParams& p = {});

/// (mu, sigma) -> (1/(2 sigma^2), -mu/sigma^2)
ChartMap gaussian_canonical_chart();
/// (beta, mu) -> (beta, -beta mu)
ChartMap gce_canonical_chart(const std::vector<double>& levels);

/// Occupation numbers as a data set, known through their two totals.
DataSet gce_occupations(const std::vector<double>& levels, const std::vector<double>& n);
/// Mean occupation of each level at (beta, mu).
std::vector<double> gce_mean_occupations(const std::vector<double>& levels, double beta, double mu);

/// Closed-form geodesic (beta, mu)(t) from theta0 with velocity v0.
Vec gce_geodesic_oracle(const Vec& theta0, const Vec& v0, double t);
/// Covariant-constant field seeded with v^beta = vb at mu = mu0.
Vec gce_field_oracle(double mu0, double vb, const Vec& theta);

/// Point on the Gumbel model fitted to Exponential(lambda).
Vec gumbel_exponential_point(double lambda);
/// Rate of the exponential fibre member at alpha.
double gumbel_exponential_rate(double alpha);

} // namespace dsm
