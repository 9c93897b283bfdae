//! Random inputs: circular laws, sources, static and time-dependent velocities.

pub mod correlation;
pub mod energy;
pub mod law;
pub mod rng;
pub mod source;
pub mod velocity;

pub use correlation::{CorrelationKind, CorrelationModel, ModeProcess, VelocityPath};
pub use energy::{energy_shell_mean_exact, energy_shell_var_exact, shell_energy};
pub use law::{sample_circular, CircularLaw, ModulusLaw};
pub use rng::{Component, CounterRng, StreamKey};
pub use source::{synth_source, SourceSpec};
pub use velocity::{synth_velocity_static, VelocityModes, VelocityParams};
