//! Isotopy paths, the Micallef–Wang connected sum, canonical assemblies,
//! rotationally symmetric model flows and grid certification.

pub mod assembly;
pub mod certify;
pub mod flows;
pub mod mw;
pub mod path;
pub mod paths;

pub use assembly::{canonical_assembly, AssemblyOptions, CanonicalAssembly, JoinSpec, NeckRecord, Piece, PieceKind};
pub use certify::{certify_atlas, certify_path, CertificationReport, CertifyConfig, Condition};
pub use path::{Atlas, AtlasChart, CoordMap, FixedRegion, IsotopyPath, Junction, Overlap, PathKind, WarpedView};
pub use paths::{star_shaped_path, tube_straighten_path, warped_flatten_path, FlattenOptions, TubeOptions};
pub use flows::{ricci_flow_warped, yamabe_flow_rotsym, FlowEnds, FlowEvent, Gauge, RicciOptions, RicciTrajectory, YamabeOptions, YamabeTrajectory};
pub use mw::{mw_build_profile, mw_connect, mw_self_connect, Attachment, MWJoin, MWProfile};
