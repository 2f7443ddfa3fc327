"""
URL configuration for the planning_lab project.

Only the admin is served; it is used to browse the experiment run ledger.
"""

from django.contrib import admin
from django.urls import path
from django.views.generic import RedirectView

urlpatterns = [
    path("", RedirectView.as_view(url="/admin/", permanent=False)),
    path("admin/", admin.site.urls),
]
