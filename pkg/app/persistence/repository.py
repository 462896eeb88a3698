from abc import ABC, abstractmethod

from app.extensions import db


class Repository(ABC):
    @abstractmethod
    def add(self, obj):
        pass

    @abstractmethod
    def get(self, obj_id):
        pass

    @abstractmethod
    def get_all(self):
        pass

    @abstractmethod
    def delete(self, obj_id):
        pass


class SQLAlchemyRepository(Repository):
    """Stores one model; `order_by` is the column listings are sorted on."""

    def __init__(self, model, order_by=None):
        self.model = model
        self.order_by = order_by

    def _query(self):
        query = self.model.query
        if self.order_by is not None:
            query = query.order_by(self.order_by)
        return query

    def add(self, obj):
        db.session.add(obj)
        db.session.commit()
        return obj

    def get(self, obj_id):
        return db.session.get(self.model, obj_id)

    def get_all(self):
        return self._query().all()

    def filter_by(self, **criteria):
        return self._query().filter_by(**criteria).all()

    def delete(self, obj_id):
        obj = self.get(obj_id)
        if obj is None:
            return False
        db.session.delete(obj)
        db.session.commit()
        return True
