pub mod chartab;
pub mod cli;
pub mod driver;
pub mod exactnum;
pub mod isolve;
pub mod numtheory;
pub mod sysbuild;
pub mod wagner;
