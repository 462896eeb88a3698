from app.services.facade import SpatialShiftFacade

facade = SpatialShiftFacade()
