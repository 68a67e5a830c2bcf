//! Guide chapters, compiled so that their code listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/ingest.md")]
pub mod ingest {}
#[doc = include_str!("../../../book/src/embedding.md")]
pub mod embedding {}
#[doc = include_str!("../../../book/src/local-gaussians.md")]
pub mod local_gaussians {}
#[doc = include_str!("../../../book/src/curvature.md")]
pub mod curvature {}
#[doc = include_str!("../../../book/src/dispersion.md")]
pub mod dispersion {}
#[doc = include_str!("../../../book/src/classification.md")]
pub mod classification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
