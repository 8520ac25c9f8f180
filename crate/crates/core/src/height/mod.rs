//! Admissible domino height functions and their construction from profiles.

mod field;
mod init;
mod profile;
mod pyramid;

pub use field::{HeightField, Violation};
pub use init::{lift, phi_bruteforce_oracle, phi_from_profile, residue_floor};
pub use profile::{lipschitz2_project, Profile, SampleGrid};
pub use pyramid::{pyramid_oracle, rooted_pyramid, PyramidTable};
