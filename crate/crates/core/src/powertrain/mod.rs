pub mod lossmap;
pub mod model;
pub mod motor;
pub mod vehicle;

pub use lossmap::{
    generate_synthetic_map, interpolate_loss, map_from_slices, uniform_grid, LossMap, SyntheticKind, TORQUE_RANGE_SLACK,
};
pub use model::{fit_loss_model, model_loss, LossModel, SliceCheck, SliceFitMeta, SpeedBlend};
pub use motor::{motor_electric_power, LossSource, MotorSpec, TorqueCurve};
pub use vehicle::{
    cycle_torque_demand, resistive_force, total_energy, DriveCycle, SpeedSampling, VehicleParams, WheelDemand,
};
