//! Hamilton's surgery factor, the standard solution and cap isotopies.

mod caps;
mod profile;
mod prop51;
mod standard;

pub use caps::{
    closeness_to_std, double_fixed_region_residual, double_surgery_isotopy, linear_homotopy_residual, rotational_asymmetry,
    surgery_cap_path, CapOptions, DoubleSurgeryData, DoubleSurgeryOptions, DoubleSurgeryResult, SurgeryMap,
};
pub use profile::{apply_surgery, surgery_factor, Smallness, SurgeryProfile, Q_MIN, SMALLNESS_BOUND};
pub use prop51::{verify_prop51, Prop51Options, Prop51Report, Prop51Sample};
pub use standard::{build_standard_solution, StandardSolutionModel, TransitionJumps, JUNCTION};
