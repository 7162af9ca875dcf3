pub mod amoeba;
pub mod dequant;
pub mod exact;
pub mod formula;
pub mod nonarch;
pub mod sphere;
pub mod tropical;
