//! Possibilistic inferential models.
//!
//! A statistical model and observed data are turned into a possibility contour
//! over the parameter space whose level sets are exact confidence regions. The
//! crate covers the whole pipeline:
//!
//! * [`possibility`]: contours, maxitive possibility / necessity measures, the
//!   probability-to-possibility transform and Gaussian possibility contours.
//! * [`models`]: the sampling models (normal, gamma, logistic-binomial,
//!   multinomial, simple linear regression) with likelihoods, simulators and
//!   maximum likelihood solvers.
//! * [`im`]: validification of the relative likelihood by Monte Carlo or the
//!   Wilks approximation, confidence regions, tests and the constructions that
//!   turn nested tests or confidence families into contours.
//! * [`marginal`]: extension- and profile-based elimination of nuisance
//!   parameters.
//! * [`credal`]: sampling the inner probabilistic approximation through
//!   ellipsoidal level-set surrogates.
//! * [`predict`] and [`risk`]: conformal prediction and bootstrap contours for
//!   empirical risk minimizers.
//! * [`diagnostics`]: false-confidence rates of posterior distributions.
//! * [`cli`] and [`io`]: the `possim` driver, JSON run configuration and CSV
//!   artifacts.
//!
//! ```
//! use possim::models::{builtin, Dataset};
//! use possim::im::LikelihoodIm;
//!
//! let data = Dataset::from_reals("toy", vec![1.2, 0.4, -0.3, 2.2, 0.9]);
//! let im = LikelihoodIm::new(builtin::normal(), data).unwrap();
//! // The contour equals one at the maximum likelihood estimate.
//! assert_eq!(im.contour_wilks(im.mle()).unwrap(), 1.0);
//! ```

pub mod cli;
pub mod credal;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod im;
pub mod io;
pub mod marginal;
pub mod models;
pub mod optimize;
pub mod possibility;
pub mod predict;
pub mod risk;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use possibility::{HypothesisSet, PossibilityContour};
